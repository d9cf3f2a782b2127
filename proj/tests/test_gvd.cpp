#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "geodiff/generators.hpp"
#include "geodiff/gvd.hpp"
#include "test_util.hpp"

using namespace geodiff;

namespace {

GeodesicOptions plain() {
  GeodesicOptions o;
  o.mollifier.enabled = false;
  return o;
}

std::vector<SurfacePoint> tetrahedral(const TriangleMesh& m) {
  std::vector<SurfacePoint> s;
  for (Vec3 d : {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)}) s.push_back(locate_direction(m, d));
  return s;
}

std::vector<SurfacePoint> random_sites(const TriangleMesh& m, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  std::vector<SurfacePoint> s;
  for (int i = 0; i < n; ++i) s.push_back(locate_direction(m, Vec3(g(rng), g(rng), g(rng))));
  return s;
}

// site k moved by h along tangent coordinate c
std::vector<SurfacePoint> nudged(std::vector<SurfacePoint> s, int k, int c, double h) {
  Vec2 e = Vec2::Zero();
  e[c] = h;
  s[k].w += tangent_basis() * e;
  return s;
}

int find_vertex(const VoronoiDiagram& d, const std::vector<int>& sites) {
  for (int v : d.vertices)
    if (d.nodes[v].sites == sites) return v;
  return -1;
}

int find_crossing(const VoronoiDiagram& d, int edge) {
  for (size_t i = 0; i < d.nodes.size(); ++i)
    if (d.nodes[i].edge == edge) return static_cast<int>(i);
  return -1;
}

// position of a node as a function of its local coordinates
Vec3 node_velocity(const TriangleMesh& m, const BoundaryVertex& n, const VecX& local) {
  if (!n.is_voronoi_vertex()) return local[0] * m.he_vector(n.halfedge);
  return tangent_frame(m, n.x.face) * Vec2(local[0], local[1]);
}

}  // namespace

TEST_CASE("input checks") {
  TriangleMesh m = make_icosphere(1);
  GeodesicEngine eng(m);
  CHECK_THROWS_AS(approximate_gvd(eng, {locate_direction(m, Vec3(0, 0, 1))}), GvdError);
  SurfacePoint a = locate_direction(m, Vec3(0, 0, 1));
  CHECK_THROWS_AS(approximate_gvd(eng, {a, a}), GvdError);
  CHECK_THROWS_AS(parse_gvd_objective("flatness"), GvdError);
  CHECK(parse_gvd_objective("planarity") == GvdObjectiveKind::Planarity);
}

TEST_CASE("two sites on a flat strip split along the bisector") {
  TriangleMesh m = make_grid(9, 2, 2.0, 0.5);
  GeodesicEngine eng(m, plain());
  std::vector<SurfacePoint> s{closest_point(m, Vec3(0.5, 0.25, 0)), closest_point(m, Vec3(1.5, 0.25, 0))};
  VoronoiDiagram d = compute_gvd(eng, s);
  int left = 0, right = 0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    const int want = m.position(v).x() < 1.0 ? 0 : 1;
    CHECK(d.label[v] == want);
    (want == 0 ? left : right) += 1;
  }
  CHECK(left == right);
  CHECK(d.vertices.empty());
  CHECK(d.num_cells() == 2);
  REQUIRE(!d.nodes.empty());
  for (const auto& n : d.nodes) {
    CHECK(std::abs(embed(m, n.x).x() - 1.0) < 1e-12);
    CHECK(n.residual <= 1e-12);
  }

  // moving both sites by e moves every crossing along its edge so that the
  // bisector shifts by the x part of e
  for (Vec3 e : {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.6, -0.8, 0)})
    for (size_t i = 0; i < d.nodes.size(); ++i) {
      NodeSensitivity ns = node_sensitivity(eng, d, static_cast<int>(i));
      VecX dtau = VecX::Zero(1);
      for (size_t k = 0; k < ns.sites.size(); ++k)
        dtau += ns.d.block(0, 2 * static_cast<int>(k), 1, 2) * to_local(m, s[ns.sites[k]].face, e);
      CHECK(node_velocity(m, d.nodes[i], dtau).x() == doctest::Approx(e.x()).epsilon(1e-10));
    }
}

TEST_CASE("three symmetric sites meet at the circumcenter") {
  TriangleMesh m = make_grid(10, 10, 2.0, 2.0);
  GeodesicEngine eng(m, plain());
  const Vec3 c(1.03, 0.97, 0);
  std::vector<SurfacePoint> s;
  for (int k = 0; k < 3; ++k) {
    const double th = 0.3 + 2 * M_PI * k / 3;
    s.push_back(closest_point(m, c + 0.6 * Vec3(std::cos(th), std::sin(th), 0)));
  }
  VoronoiDiagram d = compute_gvd(eng, s);
  CHECK(d.num_cells() == 3);
  REQUIRE(d.vertices.size() == 1);
  const BoundaryVertex& v = d.nodes[d.vertices[0]];
  CHECK((embed(m, v.x) - c).norm() < 1e-12);
  CHECK(v.residual <= 1e-12);

  // rotating the sites about the origin by a small angle moves the vertex
  // with the same rigid velocity
  NodeSensitivity ns = node_sensitivity(eng, d, d.vertices[0]);
  VecX dy = VecX::Zero(2);
  for (size_t k = 0; k < ns.sites.size(); ++k) {
    const Vec3 p = embed(m, s[ns.sites[k]]);
    dy += ns.d.block(0, 2 * static_cast<int>(k), 2, 2) * to_local(m, s[ns.sites[k]].face, Vec3(-p.y(), p.x(), 0));
  }
  const Vec3 y = embed(m, v.x);
  CHECK((node_velocity(m, v, dy) - Vec3(-y.y(), y.x(), 0)).norm() < 1e-10);
}

TEST_CASE("tetrahedral sites on a sphere") {
  TriangleMesh m = make_icosphere(2);
  GeodesicEngine eng(m);
  std::vector<SurfacePoint> s = tetrahedral(m);
  VoronoiDiagram d = compute_gvd(eng, s);
  CHECK(d.num_cells() == 4);
  CHECK(d.vertices.size() == 4);
  CHECK(d.arcs.size() == 6);
  CHECK(d.max_residual() <= 1e-8);
  for (int v : d.vertices) {
    const BoundaryVertex& n = d.nodes[v];
    REQUIRE(n.sites.size() == 3);
    // opposite the missing site
    int missing = 0 + 1 + 2 + 3 - n.sites[0] - n.sites[1] - n.sites[2];
    CHECK(embed(m, n.x).normalized().dot(-embed(m, s[missing]).normalized()) > 1 - 1e-9);
  }
  for (const auto& a : d.arcs) {
    for (int end : {a.a, a.b}) {
      const auto& ss = d.nodes[end].sites;
      CHECK(std::count(ss.begin(), ss.end(), a.s0) == 1);
      CHECK(std::count(ss.begin(), ss.end(), a.s1) == 1);
    }
  }

  // the objectives are at a symmetric point
  ObjectiveJet reg = objective_jet(eng, d, {GvdObjectiveKind::Regularity});
  CHECK(reg.grad.lpNorm<Eigen::Infinity>() < 1e-10);
  const double L = eng.shortest(d.nodes[d.arcs[0].a].x, d.nodes[d.arcs[0].b].x).length;
  ObjectiveJet uni = objective_jet(eng, d, {GvdObjectiveKind::Uniformity, L});
  CHECK(uni.value < 1e-20);
  CHECK(uni.grad.lpNorm<Eigen::Infinity>() < 1e-10);

  SolverConfig cfg;
  cfg.method = Method::LBFGS;
  GvdRun run = optimize_sites(m, s, {GvdObjectiveKind::Uniformity, L}, cfg);
  CHECK(run.solve.status == Status::Converged);
  CHECK(run.solve.iterations == 0);
}

TEST_CASE("boundary vertex sensitivity matches finite differences") {
  TriangleMesh m = make_icosphere(1);
  GeodesicEngine eng(m);
  std::vector<SurfacePoint> s = random_sites(m, 6, 4);
  VoronoiDiagram d = compute_gvd(eng, s);
  REQUIRE(d.max_residual() <= 1e-8);
  const double h = 1e-5;
  // a few vertices and crossings
  std::vector<int> nodes(d.vertices.begin(), d.vertices.begin() + std::min<size_t>(3, d.vertices.size()));
  for (size_t i = 0, c = 0; i < d.nodes.size() && c < 3; i += 7)
    if (!d.nodes[i].is_voronoi_vertex()) {
      nodes.push_back(static_cast<int>(i));
      ++c;
    }
  for (int id : nodes) {
    const BoundaryVertex& n = d.nodes[id];
    NodeSensitivity ns = node_sensitivity(eng, d, id);
    for (size_t k = 0; k < ns.sites.size(); ++k)
      for (int c = 0; c < 2; ++c) {
        VoronoiDiagram dp = compute_gvd(eng, nudged(s, ns.sites[k], c, h));
        VoronoiDiagram dm = compute_gvd(eng, nudged(s, ns.sites[k], c, -h));
        auto at = [&](const VoronoiDiagram& q) {
          int j = n.is_voronoi_vertex() ? find_vertex(q, n.sites) : find_crossing(q, n.edge);
          REQUIRE(j >= 0);
          return embed(m, q.nodes[j].x);
        };
        const Vec3 fd = (at(dp) - at(dm)) / (2 * h);
        const Vec3 an = node_velocity(m, n, ns.d.col(2 * static_cast<int>(k) + c));
        CAPTURE(id);
        CHECK((an - fd).norm() <= 1e-4 * (1 + an.norm()));
      }
  }
}

TEST_CASE("objective gradients match finite differences of the whole pipeline") {
  TriangleMesh m = make_icosphere(1);
  GeodesicEngine eng(m);
  std::vector<SurfacePoint> s = random_sites(m, 6, 9);
  VoronoiDiagram d = compute_gvd(eng, s);
  const double h = 1e-5;
  GvdOptions fast;
  fast.refine_crossings = false;
  for (GvdObjective obj : {GvdObjective{GvdObjectiveKind::Uniformity, 0.5}, GvdObjective{GvdObjectiveKind::Planarity},
                           GvdObjective{GvdObjectiveKind::Regularity}}) {
    CAPTURE(to_string(obj.kind));
    ObjectiveJet j = objective_jet(eng, d, obj);
    REQUIRE(j.grad.size() == 2 * static_cast<int>(s.size()));
    const double scale = std::max(1.0, j.grad.lpNorm<Eigen::Infinity>());
    for (int k = 0; k < static_cast<int>(s.size()); ++k)
      for (int c = 0; c < 2; ++c) {
        const double fp = objective_jet(eng, compute_gvd(eng, nudged(s, k, c, h), fast), obj, false).value;
        const double fm = objective_jet(eng, compute_gvd(eng, nudged(s, k, c, -h), fast), obj, false).value;
        CHECK(std::abs((fp - fm) / (2 * h) - j.grad[2 * k + c]) <= 1e-3 * scale);
      }
  }
}

TEST_CASE("planarity vanishes on a flat mesh") {
  TriangleMesh m = make_grid(10, 10, 2.0, 2.0);
  GeodesicEngine eng(m, plain());
  std::vector<SurfacePoint> s;
  for (Vec3 p : {Vec3(1.02, 0.98, 0), Vec3(0.3, 0.35, 0), Vec3(1.7, 0.3, 0), Vec3(1.65, 1.72, 0), Vec3(0.32, 1.68, 0)})
    s.push_back(closest_point(m, p));
  VoronoiDiagram d = compute_gvd(eng, s);
  REQUIRE(d.vertices.size() == 4);
  ObjectiveJet j = objective_jet(eng, d, {GvdObjectiveKind::Planarity});
  CHECK(j.value < 1e-24);
  CHECK(j.grad.lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(mean_plane_distance(m, d) < 1e-12);
}

TEST_CASE("regularity spreads a clustered start") {
  TriangleMesh m = make_icosphere(1);
  std::vector<SurfacePoint> s;
  std::mt19937 rng(2);
  std::normal_distribution<double> g(0.0, 0.35);
  for (int i = 0; i < 5; ++i) s.push_back(locate_direction(m, Vec3(g(rng), g(rng), 1)));

  // area per cell, with each face split evenly between its corner labels
  auto area_variance = [&](const VoronoiDiagram& d) {
    std::vector<double> area(s.size(), 0.0);
    for (int f = 0; f < m.num_faces(); ++f)
      for (int k = 0; k < 3; ++k) area[d.label[m.face(f)[k]]] += m.face_area(f) / 3;
    double mean = 0, var = 0;
    for (double a : area) mean += a / area.size();
    for (double a : area) var += (a - mean) * (a - mean) / area.size();
    return var;
  };

  SolverConfig cfg;
  cfg.method = Method::LBFGS;
  cfg.max_iterations = 15;
  GvdRun run = optimize_sites(m, s, {GvdObjectiveKind::Regularity}, cfg);
  REQUIRE(run.solve.trace.size() >= 2);
  for (size_t k = 1; k < run.solve.trace.size(); ++k)
    CHECK(run.solve.trace[k].energy < run.solve.trace[k - 1].energy);
  CHECK(area_variance(run.final) < area_variance(run.initial));
  CHECK(run.final.max_residual() <= 1e-8);
}

TEST_CASE("the outer loop rejects Newton") {
  TriangleMesh m = make_icosphere(1);
  SolverConfig cfg;
  cfg.method = Method::Newton;
  CHECK_THROWS_AS(optimize_sites(m, random_sites(m, 4, 1), {GvdObjectiveKind::Regularity}, cfg), SolverError);
}
