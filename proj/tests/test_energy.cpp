#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <numeric>

#include "geodiff/energy.hpp"
#include "geodiff/generators.hpp"
#include "geodiff/verify.hpp"
#include "test_util.hpp"

using namespace geodiff;
using geodiff::testing::random_point;

namespace {

std::array<Vec2, 3> edges_of(const Vec2& a, const Vec2& b, const Vec2& c) { return {b - a, c - b, a - c}; }

Vec3 squared(const std::array<Vec2, 3>& e) { return {e[0].squaredNorm(), e[1].squaredNorm(), e[2].squaredNorm()}; }

// A small membrane patch on a host: points at interior spots of a few faces,
// elements flattened from their initial geodesic lengths.
struct Patch {
  std::vector<SurfacePoint> points;
  std::vector<MembraneElement> elements;
};

Patch make_patch(const GeodesicEngine& eng, std::vector<SurfacePoint> pts, std::vector<std::array<int, 3>> tris) {
  Patch p;
  p.points = std::move(pts);
  for (const auto& t : tris) {
    auto len = [&](int a, int b) { return eng.shortest(p.points[t[a]], p.points[t[b]]).length; };
    p.elements.push_back(element_from_lengths(t, len(0, 1), len(1, 2), len(2, 0)));
  }
  return p;
}

std::vector<SurfacePoint> sphere_points(const TriangleMesh& m) {
  std::vector<SurfacePoint> out;
  for (Vec3 d : {Vec3(0.1, 0.2, 1), Vec3(0.6, 0.1, 0.8), Vec3(0.2, 0.7, 0.7), Vec3(-0.4, 0.4, 0.8)})
    out.push_back(locate_direction(m, d));
  return out;
}

}  // namespace

TEST_CASE("Cauchy-Green tensor from squared lengths") {
  auto e = edges_of(Vec2(0, 0), Vec2(1, 0), Vec2(0.3, 0.8));
  Vec3 c = cauchy_green(e, squared(e));
  CHECK((c - Vec3(1, 0, 1)).norm() < 1e-12);
  c = cauchy_green(e, 4.0 * squared(e));
  CHECK((c - Vec3(4, 0, 4)).norm() < 1e-12);
  // F = diag(2, 1)
  std::array<Vec2, 3> f;
  for (int k = 0; k < 3; ++k) f[k] = Vec2(2 * e[k].x(), e[k].y());
  c = cauchy_green(e, squared(f));
  CHECK((c - Vec3(4, 0, 1)).norm() < 1e-12);
  CHECK_THROWS_AS(cauchy_green(edges_of(Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)), Vec3(1, 1, 4)), EnergyError);
}

TEST_CASE("neo-Hookean density: rest, dilation, derivatives") {
  Material m{0.7, 1.3};
  Vec3 g;
  Mat3 H;
  CHECK(std::abs(neo_hookean(Vec3(1, 0, 1), m, &g, &H)) < 1e-15);
  CHECK(g.norm() < 1e-15);
  for (double s : {0.5, 0.9, 1.1, 2.0}) {
    double L = std::log(s);
    double expect = m.mu * (s * s - 1 - 2 * L) + 2 * m.lambda * L * L;
    CHECK(std::abs(neo_hookean(Vec3(s * s, 0, s * s), m) - expect) < 1e-12);
  }
  Vec3 c(1.3, 0.2, 0.8);
  neo_hookean(c, m, &g, &H);
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    CHECK(std::abs((neo_hookean(c + e, m) - neo_hookean(c - e, m)) / (2 * h) - g[k]) < 1e-8);
    Vec3 gp, gm;
    neo_hookean(c + e, m, &gp);
    neo_hookean(c - e, m, &gm);
    CHECK(((gp - gm) / (2 * h) - H.col(k)).norm() < 1e-7);
  }
  CHECK(std::isinf(neo_hookean(Vec3(1, 2, 1), m)));
}

TEST_CASE("membrane at its rest state has zero energy and gradient") {
  TriangleMesh m = make_icosphere(2);
  GeodesicEngine eng(m);
  Patch p = make_patch(eng, sphere_points(m), {{0, 1, 2}, {0, 2, 3}});
  EnergyProblem prob(m);
  prob.add(std::make_shared<GeodesicMembrane>(p.elements, Material{}));
  prob.set_layout(4, {});
  Evaluation ev = prob.evaluate(prob.initial_state(p.points), 2);
  CHECK(std::abs(ev.value) < 1e-12);
  CHECK(ev.grad.norm() < 1e-10);
  // positive semidefinite at rest
  Eigen::SelfAdjointEigenSolver<MatX> es{MatX(ev.hess)};
  CHECK(es.eigenvalues().minCoeff() > -1e-9);
}

TEST_CASE("membrane energy ignores point relabeling") {
  TriangleMesh m = make_icosphere(2);
  GeodesicEngine eng(m);
  auto pts = sphere_points(m);
  Patch p = make_patch(eng, pts, {{0, 1, 2}, {0, 2, 3}});
  // stretch the patch a little
  pts[1] = locate_direction(m, Vec3(0.75, 0.05, 0.7));
  EnergyProblem a(m);
  a.add(std::make_shared<GeodesicMembrane>(p.elements, Material{}));
  a.set_layout(4, {});
  double Ea = a.evaluate(a.initial_state(pts), 0).value;
  CHECK(Ea > 1e-4);

  const std::array<int, 4> perm{2, 3, 0, 1};  // old index -> new
  std::vector<SurfacePoint> q(4);
  for (int i = 0; i < 4; ++i) q[perm[i]] = pts[i];
  std::vector<MembraneElement> els = p.elements;
  for (auto& e : els)
    for (int& v : e.v) v = perm[v];
  EnergyProblem b(m);
  b.add(std::make_shared<GeodesicMembrane>(els, Material{}));
  b.set_layout(4, {});
  CHECK(std::abs(b.evaluate(b.initial_state(q), 0).value - Ea) < 1e-12);
}

TEST_CASE("energies are invariant under rigid motions of the host") {
  TriangleMesh m = make_icosphere(2);
  GeodesicEngine eng(m);
  auto pts = sphere_points(m);
  Patch p = make_patch(eng, pts, {{0, 1, 2}, {0, 2, 3}});
  pts[3] = locate_direction(m, Vec3(-0.5, 0.45, 0.75));
  Mat3 R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  std::vector<Vec3> moved;
  for (const auto& x : m.positions()) moved.push_back(R * x + Vec3(0.3, -2, 5));
  TriangleMesh m2 = m.with_positions(moved);

  auto energy = [&](const TriangleMesh& host) {
    EnergyProblem prob(host);
    prob.add(std::make_shared<GeodesicMembrane>(p.elements, Material{}));
    prob.add(std::make_shared<SpringNetwork>(std::vector<Spring>{{0, 2, 0.1, 2.0}, {1, 3, 0.0, 1.0}}));
    prob.set_layout(4, {});
    return prob.evaluate(prob.initial_state(pts), 0).value;
  };
  double e1 = energy(m), e2 = energy(m2);
  CHECK(e1 > 1e-4);
  CHECK(std::abs(e1 - e2) <= 1e-10);
}

TEST_CASE("spring network derivatives match finite differences") {
  TriangleMesh m = make_icosphere(2);
  m.normalize();
  std::mt19937 rng(11);
  std::vector<SurfacePoint> pts;
  for (int i = 0; i < 5; ++i) pts.push_back(random_point(m, rng, 0.05));
  std::vector<Spring> springs{{0, 1, 0.2, 1.0}, {1, 2, 0.0, 2.0}, {2, 3, 0.1, 0.5}, {3, 4, 0.3, 1.0}, {4, 0, 0.0, 1.0}};
  EnergyProblem prob(m);
  prob.add(std::make_shared<SpringNetwork>(springs));
  prob.set_layout(5, {0, 0, 1, 0, 0});
  EnergyCheck c = check_energy(prob, prob.initial_state(pts));
  CHECK(c.dofs == 8);
  CHECK(c.grad_err <= 1e-5);
  CHECK(c.hess_err <= 1e-4);
  CHECK(c.sym_err < 1e-12);
}

TEST_CASE("Karcher energy derivatives match finite differences") {
  TriangleMesh m = make_icosphere(2);
  std::mt19937 rng(5);
  std::vector<SurfacePoint> pts{locate_direction(m, Vec3(0.3, 0.2, 1))};
  for (Vec3 d : {Vec3(1, 0, 1), Vec3(-0.5, 0.8, 1), Vec3(-0.4, -0.9, 1), Vec3(0.2, -0.3, 1)})
    pts.push_back(locate_direction(m, d));
  EnergyProblem prob(m);
  prob.add(karcher_term(4));
  std::vector<char> fixed(5, 1);
  fixed[0] = 0;
  prob.set_layout(5, fixed);
  EnergyCheck c = check_energy(prob, prob.initial_state(pts));
  CHECK(c.dofs == 2);
  CHECK(c.grad_err <= 1e-5);
  CHECK(c.hess_err <= 1e-4);
}

TEST_CASE("membrane derivatives match finite differences away from rest") {
  TriangleMesh m = make_icosphere(2);
  GeodesicEngine eng(m);
  auto pts = sphere_points(m);
  Patch p = make_patch(eng, pts, {{0, 1, 2}, {0, 2, 3}});
  pts[1] = locate_direction(m, Vec3(0.7, 0.05, 0.75));
  pts[3] = locate_direction(m, Vec3(-0.3, 0.5, 0.8));
  EnergyProblem prob(m);
  prob.add(std::make_shared<GeodesicMembrane>(p.elements, Material{1.0, 2.0}));
  prob.set_layout(4, {});
  EnergyCheck c = check_energy(prob, prob.initial_state(pts));
  CHECK(c.dofs == 8);
  CHECK(c.grad_err <= 1e-5);
  CHECK(c.hess_err <= 1e-4);
}

TEST_CASE("enclosed volume and its derivatives") {
  TriangleMesh cube = make_cube(1);
  CHECK(enclosed_volume(cube) == doctest::Approx(8.0).epsilon(1e-12));
  TriangleMesh s = make_icosphere(3);
  CHECK(enclosed_volume(s) < 4.0 * M_PI / 3);
  CHECK(enclosed_volume(s) > 0.97 * 4.0 * M_PI / 3);

  TriangleMesh m = make_icosphere(0);
  HostModel hm;
  hm.volume_weight = 3.0;
  hm.rest_volume = 1.1 * enclosed_volume(m);
  EnergyProblem prob(m);
  prob.add(std::make_shared<HostEnergy>(m, hm));
  prob.set_layout(0, {}, true);
  State x = prob.initial_state({});
  std::mt19937 rng(2);
  std::normal_distribution<double> n(0.0, 0.03);
  for (auto& v : x.host) v += Vec3(n(rng), n(rng), n(rng));
  EnergyCheck c = check_energy(prob, x);
  CHECK(c.dofs == 36);
  CHECK(c.grad_err <= 1e-5);
  CHECK(c.hess_err <= 1e-4);
}

TEST_CASE("coupled points and host on two triangles") {
  TriangleMesh m = make_square();
  std::vector<SurfacePoint> pts{{0, Vec3(0.5, 0.3, 0.2)}, {1, Vec3(0.2, 0.3, 0.5)}};
  HostModel hm;
  hm.material = Material{1.0, 1.0};
  EnergyProblem prob(m);
  prob.add(std::make_shared<SpringNetwork>(std::vector<Spring>{{0, 1, 0.3, 1.0}}));
  prob.add(std::make_shared<HostEnergy>(m, hm));
  prob.set_layout(2, {}, true);
  State x = prob.initial_state(pts);
  x.host[0] += Vec3(0.05, -0.02, 0.1);
  x.host[2] += Vec3(-0.03, 0.04, -0.06);
  EnergyCheck c = check_energy(prob, x);
  CHECK(c.dofs == 4 + 12);
  CHECK(c.grad_err <= 1e-5);
  CHECK(c.hess_err <= 1e-4);
}

TEST_CASE("coupled membrane and host on an 80-face sphere") {
  TriangleMesh m = make_icosphere(1);
  GeodesicEngine eng(m);
  auto pts = sphere_points(m);
  Patch p = make_patch(eng, pts, {{0, 1, 2}, {0, 2, 3}});
  pts[1] = locate_direction(m, Vec3(0.7, 0.05, 0.75));
  HostModel hm;
  hm.volume_weight = 1.0;
  hm.rest_volume = enclosed_volume(m);
  EnergyProblem prob(m);
  prob.add(std::make_shared<GeodesicMembrane>(p.elements, Material{}));
  prob.add(std::make_shared<HostEnergy>(m, hm));
  prob.set_layout(4, {}, true);
  State x = prob.initial_state(pts);
  std::mt19937 rng(8);
  std::normal_distribution<double> n(0.0, 0.01);
  for (auto& v : x.host) v += Vec3(n(rng), n(rng), n(rng));
  EnergyCheck c = check_energy(prob, x);
  CHECK(c.dofs == 8 + 3 * 42);
  CHECK(c.grad_err <= 1e-5);
  CHECK(c.hess_err <= 1e-4);
}
