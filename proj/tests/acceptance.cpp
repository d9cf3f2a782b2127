// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "geodiff/generators.hpp"
#include "geodiff/gvd.hpp"
#include "geodiff/scenario.hpp"
#include "geodiff/solver.hpp"
#include "geodiff/verify.hpp"
#include "test_util.hpp"

using namespace geodiff;

namespace {

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("CRITERION %d %s: %s (%s)\n", id, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// converged mollified Newton runs, collected for the last criterion. Runs
// whose minimum is not isolated are listed but do not count: a singular
// Hessian at the solution rules out a quadratic rate.
struct NewtonRun {
  std::string name;
  SolveResult result;
  bool isolated = true;
};
std::vector<NewtonRun> newton_runs;

void keep(const std::string& name, const SolveResult& r, bool isolated = true) {
  if (r.status == Status::Converged) newton_runs.push_back({name, r, isolated});
}

SolverConfig newton(int max_it = 200) {
  SolverConfig c;
  c.method = Method::Newton;
  c.tolerance = 1e-9;
  c.max_iterations = max_it;
  return c;
}

// ---------------------------------------------------------------------------

void derivatives() {
  const auto t0 = Clock::now();
  struct Case {
    const char* name;
    TriangleMesh mesh;
  };
  std::vector<Case> meshes{{"grid", make_grid(8, 8)},
                           {"icosphere2", make_icosphere(2)},
                           {"cube", make_cube(6)},
                           {"fold", make_fold(6)},
                           {"torus", make_torus(1.0, 0.4, 32, 16)}};
  double ge = 0, he = 0;
  int hess_checked = 0, total = 0;
  for (auto& c : meshes) {
    c.mesh.normalize();
    GeodesicEngine eng(c.mesh);
    std::mt19937 rng(17);
    for (int i = 0; i < 20; ++i) {
      SurfacePoint a = testing::random_point(c.mesh, rng), b = testing::random_point(c.mesh, rng);
      JetCheck j = check_distance_jet(eng, a, b);
      ge = std::max(ge, j.grad_err);
      if (j.hess_checked) {
        he = std::max(he, j.hess_err);
        ++hess_checked;
      }
      ++total;
    }
  }
  const double s = since(t0);
  report(1, ge <= 1e-5 && he <= 1e-4 && s <= 120, "distance derivatives vs finite differences, 5 meshes x 20",
         fmt("max grad err %.2e, max Hessian err %.2e over %d/%d checked, %.1f s", ge, he, hess_checked, total, s));
}

void exactness() {
  const auto t0 = Clock::now();
  double worst = 0, over = -1;
  for (TriangleMesh m : {make_icosphere(3), make_cube(8)}) {
    m.normalize();
    GeodesicEngine eng(m);
    SteinerGraph oracle(m, 16);
    std::mt19937 rng(7);
    for (int i = 0; i < 50; ++i) {
      SurfacePoint a = testing::random_point(m, rng), b = testing::random_point(m, rng);
      const double g = eng.shortest(a, b).length, o = oracle.distance(m, a, b);
      worst = std::max(worst, std::abs(g - o));
      over = std::max(over, g - o);
    }
  }
  const double s = since(t0);
  report(2, worst <= 2e-3 && over <= 1e-12 && s <= 120, "shortest geodesic vs 16-point Steiner oracle, 2 meshes x 50",
         fmt("max |g-oracle| %.2e, max g-oracle %.2e, %.1f s", worst, over, s));
}

void karcher() {
  const auto t0 = Clock::now();
  TriangleMesh m = make_icosphere(3);
  m.normalize();
  std::vector<SurfacePoint> pts(1);
  for (int i = 0; i < 5; ++i) {
    const double a = 2 * M_PI * i / 5 + 0.3;
    pts.push_back(locate_direction(m, Vec3(std::cos(a) * std::cos(M_PI / 6), std::sin(a) * std::cos(M_PI / 6), 0.5)));
  }
  pts[0] = pts[1];
  EnergyProblem prob(m);
  prob.add(karcher_term(5));
  prob.set_layout(6, {0, 1, 1, 1, 1, 1});
  const State x = prob.initial_state(pts);
  SolverConfig cfg = newton();
  SolveResult n = minimize(prob, x, cfg);
  keep("karcher", n);
  cfg.method = Method::LBFGS;
  SolveResult l = minimize(prob, x, cfg);
  cfg.method = Method::GradientDescent;
  SolveResult g = minimize(prob, x, cfg);
  const double s = since(t0);
  const bool ok = n.status == Status::Converged && n.iterations <= 10 && n.grad_norm < 1e-9 &&
                  g.status != Status::Converged && l.iterations > n.iterations && s <= 60;
  report(3, ok, "Karcher mean on the 1280-face sphere, 5 anchors",
         fmt("Newton %s in %d it (|g| %.1e), L-BFGS %s in %d, GD %s after %d, %.1f s", to_string(n.status), n.iterations,
             n.grad_norm, to_string(l.status), l.iterations, to_string(g.status), g.iterations, s));
}

void mollifier_ablation() {
  const double th = 0.85, h = 1.5;
  TriangleMesh m = make_saddle(8, h);
  auto at = [&](double x, double y) {
    const double X = std::cos(th) * x - std::sin(th) * y, Y = std::sin(th) * x + std::cos(th) * y;
    return closest_point(m, Vec3(X, Y, h * (X * X - Y * Y)));
  };
  // two free points joined across the hyperbolic center, each tied to two corners
  std::vector<SurfacePoint> pts{at(-0.3, 0.05), at(0.3, -0.05), at(-0.6, -0.4), at(-0.6, 0.4), at(0.6, -0.4), at(0.6, 0.4)};
  std::vector<Spring> sp{{0, 2, 0, 1}, {0, 3, 0, 1}, {1, 4, 0, 1}, {1, 5, 0, 1}, {0, 1, 0, 1}};
  SolveResult r[2];
  for (int on = 0; on < 2; ++on) {
    GeodesicOptions go;
    go.mollifier.enabled = on;
    EnergyProblem prob(m, go);
    prob.add(std::make_shared<SpringNetwork>(sp));
    prob.set_layout(6, {0, 0, 1, 1, 1, 1});
    r[on] = minimize(prob, prob.initial_state(pts), newton(200));
  }
  keep("saddle springs", r[1]);
  const bool ok = r[1].status == Status::Converged && r[1].iterations <= 50 && r[0].status != Status::Converged;
  report(4, ok, "spring through a hyperbolic vertex, with and without the mollifier",
         fmt("mollified %s in %d it (|g| %.1e), plain %s after %d it (|g| %.1e)", to_string(r[1].status),
             r[1].iterations, r[1].grad_norm, to_string(r[0].status), r[0].iterations, r[0].grad_norm));
}

void fold() {
  // free point tied to one anchor on the floor and one on the wall; the
  // surface optimum is the middle of the unfolded segment
  TriangleMesh m = make_fold(6);
  std::vector<SurfacePoint> pts{closest_point(m, Vec3(0.9, 0.3, 0)), closest_point(m, Vec3(1.0, 0.5, 0)),
                                closest_point(m, Vec3(0, 0.5, 0.7))};
  std::vector<Spring> sp{{0, 1, 0, 1}, {0, 2, 0, 1}};
  auto problem = [&](bool euclid) {
    EnergyProblem p(m);
    p.add(std::make_shared<SpringNetwork>(sp, euclid));
    p.set_layout(3, {0, 1, 1});
    return p;
  };
  EnergyProblem geo = problem(false), euc = problem(true);
  SolveResult rg = minimize(geo, geo.initial_state(pts), newton());
  SolveResult re = minimize(euc, euc.initial_state(pts), newton());
  keep("fold", rg);
  // both results measured with the surface energy
  const double eg = geo.evaluate(rg.state, 0).value, ee = geo.evaluate(re.state, 0).value;
  const bool ok = rg.status == Status::Converged && re.status == Status::Converged && eg <= 0.9 * ee;
  report(5, ok, "right-angle fold, geodesic vs Euclidean springs",
         fmt("surface energy %.6f (geodesic) vs %.6f (Euclidean optimum), ratio %.3f", eg, ee, eg / ee));
}

void membrane() {
  // rest state through the geodesic pipeline
  TriangleMesh sphere = make_icosphere(2);
  GeodesicEngine eng(sphere);
  std::vector<SurfacePoint> p{locate_direction(sphere, Vec3(0.1, 0.2, 1)), locate_direction(sphere, Vec3(0.5, 0.1, 1)),
                              locate_direction(sphere, Vec3(0.2, 0.6, 1))};
  auto sq = [&](int i, int j) { return std::pow(eng.shortest(p[i], p[j]).length, 2); };
  MembraneElement el = element_from_lengths({0, 1, 2}, std::sqrt(sq(0, 1)), std::sqrt(sq(1, 2)), std::sqrt(sq(2, 0)));
  const Vec3 c = cauchy_green(el.rest_edges, Vec3(sq(0, 1), sq(1, 2), sq(2, 0)));
  const double c_err = (c - Vec3(1, 0, 1)).lpNorm<Eigen::Infinity>();
  const double psi_rest = neo_hookean(Vec3(1, 0, 1), Material{});

  // uniform dilation on a flat grid, through the energy
  TriangleMesh grid = make_grid(8, 8);
  Material mat{0.7, 1.3};
  std::array<Vec3, 3> X{Vec3(0.21, 0.23, 0), Vec3(0.52, 0.27, 0), Vec3(0.33, 0.48, 0)};
  const Vec3 ctr(0.35, 0.33, 0);
  double dil_err = 0;
  for (double s : {0.8, 1.0, 1.1, 1.5}) {
    std::vector<SurfacePoint> q;
    for (const auto& x : X) q.push_back(closest_point(grid, ctr + s * (x - ctr)));
    EnergyProblem prob(grid);
    prob.add(std::make_shared<GeodesicMembrane>(
        std::vector<MembraneElement>{make_element({0, 1, 2}, {Vec2(X[0].x(), X[0].y()), Vec2(X[1].x(), X[1].y()),
                                                              Vec2(X[2].x(), X[2].y())})},
        mat));
    prob.set_layout(3, {});
    const double area = 0.5 * (X[1] - X[0]).cross(X[2] - X[0]).norm();
    const double L = std::log(s), closed = area * (mat.mu * (s * s - 1 - 2 * L) + 2 * mat.lambda * L * L);
    dil_err = std::max(dil_err, std::abs(prob.evaluate(prob.initial_state(q), 0).value - closed));
  }

  // torus stretch: rest shapes on the torus, host scaled 1.25 in the ring plane
  Scenario sc = load_scenario(std::string(GEODIFF_SCENARIOS) + "/torus_membrane.json");
  TriangleMesh torus = load_scenario_mesh(sc);
  ProblemSetup rest = build_problem(sc, torus);
  const auto& els = std::dynamic_pointer_cast<const GeodesicMembrane>(rest.problem->terms()[0])->elements();
  std::vector<Vec3> V = torus.positions();
  for (auto& v : V) v = Vec3(1.25 * v.x(), 1.25 * v.y(), v.z());
  std::vector<std::array<int, 3>> F;
  for (int f = 0; f < torus.num_faces(); ++f) F.push_back(torus.face(f));
  TriangleMesh stretched = TriangleMesh::build(V, F);
  std::vector<MembraneElement> unit = els;
  for (auto& e : unit) {  // the fixture's rest scale undone: rest = unstretched lengths
    for (auto& r : e.rest_edges) r /= 0.85;
    e.rest_area /= 0.85 * 0.85;
  }
  auto membrane = std::make_shared<GeodesicMembrane>(unit, Material{});
  EnergyProblem prob(stretched);
  prob.add(membrane);
  std::vector<char> fixed(rest.initial.points.size(), 0);
  fixed[0] = fixed[1] = fixed[2] = 1;
  prob.set_layout(static_cast<int>(fixed.size()), fixed);
  const State frozen = prob.initial_state(rest.initial.points);
  SolveResult r = minimize(prob, frozen, newton(100));
  if (r.status == Status::Converged) keep("torus stretch", r);
  GeodesicEngine se(stretched);
  auto max_density = [&](const State& s) {
    EvalContext ctx{stretched, se, s, se.options().mollifier, false, 0};
    auto d = membrane->densities(ctx);
    return *std::max_element(d.begin(), d.end());
  };
  const double e0 = prob.evaluate(frozen, 0).value, e1 = r.energy;
  const double d0 = max_density(frozen), d1 = max_density(r.state);

  const bool ok = c_err <= 1e-12 && psi_rest == 0.0 && dil_err <= 1e-12 && e1 < e0 && d1 < d0;
  report(6, ok, "membrane rest state, uniform dilation, torus stretch",
         fmt("|C-I| %.1e, Psi(I) = %g, dilation err %.1e, stretch energy %.5f -> %.5f (%s), max Psi %.4f -> %.4f",
             c_err, psi_rest, dil_err, e0, e1, to_string(r.status), d0, d1));
}

void coupling() {
  // derivative suites on the 80-face sphere with springs, membrane and host
  TriangleMesh m = make_icosphere(1);
  GeodesicEngine eng(m);
  std::vector<SurfacePoint> pts{locate_direction(m, Vec3(0.1, 0.2, 1)), locate_direction(m, Vec3(0.7, 0.1, 0.8)),
                                locate_direction(m, Vec3(0.2, 0.7, 0.8)), locate_direction(m, Vec3(-0.6, 0.1, 0.7))};
  std::vector<MembraneElement> els;
  for (auto t : {std::array<int, 3>{0, 1, 2}, std::array<int, 3>{0, 2, 3}})
    els.push_back(element_from_lengths(t, eng.shortest(pts[t[0]], pts[t[1]]).length * 0.9,
                                       eng.shortest(pts[t[1]], pts[t[2]]).length * 0.9,
                                       eng.shortest(pts[t[2]], pts[t[0]]).length * 0.9));
  HostModel hm;
  hm.volume_weight = 2.0;
  hm.rest_volume = 0.95 * enclosed_volume(m);
  EnergyProblem prob(m);
  prob.add(std::make_shared<GeodesicMembrane>(els, Material{}));
  prob.add(std::make_shared<SpringNetwork>(std::vector<Spring>{{1, 3, 0.5, 2.0}}));
  prob.add(std::make_shared<HostEnergy>(m, hm));
  prob.set_layout(4, {}, true);
  std::mt19937 rng(21);
  std::normal_distribution<double> n(0.0, 0.01);
  double ge = 0, he = 0;
  for (int k = 0; k < 3; ++k) {
    State x = prob.initial_state(pts);
    for (auto& v : x.host) v += Vec3(n(rng), n(rng), n(rng));
    EnergyCheck c = check_energy(prob, x);
    ge = std::max(ge, c.grad_err);
    he = std::max(he, c.hess_err);
  }

  // a spring loop tightening around the shell
  Scenario sc = load_scenario(std::string(GEODIFF_SCENARIOS) + "/coupled_loop.json");
  TriangleMesh host = load_scenario_mesh(sc);
  ProblemSetup loop = build_problem(sc, host);
  SolveResult r = minimize(*loop.problem, loop.initial, newton());
  // springs with slack reach zero energy on a whole family of loops
  keep("coupled loop", r, false);
  bool monotone = true;
  for (size_t k = 1; k < r.trace.size(); ++k)
    if (!(r.trace[k].energy < r.trace[k - 1].energy)) monotone = false;
  const double v1 = enclosed_volume(loop.problem->mesh_at(r.state)), v0 = enclosed_volume(host);

  const bool ok = ge <= 1e-5 && he <= 1e-4 && monotone && r.status == Status::Converged;
  report(7, ok, "two-way coupling on an 80-face host",
         fmt("grad err %.1e, Hessian err %.1e; loop %s in %d steps, energy %.4f -> %.2e %s, volume %.4f -> %.4f", ge, he,
             to_string(r.status), r.iterations, r.trace.front().energy, r.energy,
             monotone ? "strictly decreasing" : "NOT monotone", v0, v1));
}

std::vector<SurfacePoint> random_sites(const TriangleMesh& m, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<SurfacePoint> s;
  for (int i = 0; i < n; ++i) s.push_back(testing::random_point(m, rng, 0.05));
  return s;
}

void voronoi() {
  const auto t0 = Clock::now();
  // equidistance after refinement
  TriangleMesh m2 = make_icosphere(2);
  GeodesicEngine e2(m2);
  double residual = 0;
  bool cells = true;
  for (int n : {4, 8, 12, 20}) {
    VoronoiDiagram d = compute_gvd(e2, random_sites(m2, n, 100 + n));
    residual = std::max(residual, d.max_residual());
    cells = cells && d.num_cells() == n;
  }

  // dO/ds against finite differences of the whole pipeline
  TriangleMesh m1 = make_icosphere(1);
  GeodesicEngine e1(m1);
  const auto sites = random_sites(m1, 6, 9);
  GvdOptions fast;
  fast.refine_crossings = false;
  double fd_err = 0;
  for (auto kind : {GvdObjectiveKind::Uniformity, GvdObjectiveKind::Planarity, GvdObjectiveKind::Regularity}) {
    GvdObjective obj{kind, 0.5};
    VoronoiDiagram d = compute_gvd(e1, sites);
    ObjectiveJet j = objective_jet(e1, d, obj);
    const double scale = std::max(1.0, j.grad.lpNorm<Eigen::Infinity>()), h = 1e-5;
    for (int k = 0; k < static_cast<int>(j.grad.size()); ++k) {
      double f[2];
      for (int s = 0; s < 2; ++s) {
        auto q = sites;
        Vec2 e = Vec2::Zero();
        e[k % 2] = s ? -h : h;
        q[k / 2].w += tangent_basis() * e;
        f[s] = objective_jet(e1, compute_gvd(e1, q, fast), obj, false).value;
      }
      fd_err = std::max(fd_err, std::abs((f[0] - f[1]) / (2 * h) - j.grad[k]) / scale);
    }
  }

  // planarity on 20 sites
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  std::vector<SurfacePoint> s20;
  for (int i = 0; i < 20; ++i) s20.push_back(locate_direction(m2, Vec3(nd(rng), nd(rng), nd(rng))));
  SolverConfig cfg;
  cfg.method = Method::LBFGS;
  cfg.tolerance = 1e-6;
  cfg.max_iterations = 30;
  GvdRun run = optimize_sites(m2, s20, GvdObjective{GvdObjectiveKind::Planarity, 0.5}, cfg);
  const double p0 = mean_plane_distance(m2, run.initial), p1 = mean_plane_distance(m2, run.final);
  const double s = since(t0);

  const bool ok = residual <= 1e-8 && cells && fd_err <= 1e-3 && p0 >= 5 * p1 && s <= 600;
  report(8, ok, "geodesic Voronoi diagrams",
         fmt("max residual %.1e over 4-20 sites, dO/ds FD err %.1e, planarity %.4f -> %.5f (%.1fx in %d it), %.0f s",
             residual, fd_err, p0, p1, p0 / p1, run.solve.iterations, s));
}

void quadratic_signature() {
  // last three gradient norms of every converged Newton run above
  bool ok = !newton_runs.empty();
  double worst_ratio = 0;
  std::string detail;
  for (const auto& [name, r, isolated] : newton_runs) {
    const auto& t = r.trace;
    if (t.size() < 3) {
      detail += name + ": fewer than 3 iterates; ";
      continue;
    }
    const double g0 = t[t.size() - 3].grad_norm, g1 = t[t.size() - 2].grad_norm, g2 = t.back().grad_norm;
    const bool super = g1 < std::pow(g0, 1.5) && g2 < std::pow(g1, 1.5);
    const double ratio = std::max(g1 / (g0 * g0), g2 / (g1 * g1));
    const bool bounded = ratio <= 1e3;
    if (isolated) {
      worst_ratio = std::max(worst_ratio, ratio);
      ok = ok && super && bounded;
    }
    detail += fmt("%s: %.1e %.1e %.1e%s%s; ", name.c_str(), g0, g1, g2, super && bounded ? "" : " (violates)",
                  isolated ? "" : " [non-isolated minimum, not counted]");
  }
  detail += fmt("max |g+|/|g|^2 %.2e", worst_ratio);
  report(9, ok, "quadratic convergence of mollified Newton runs", detail);
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void()>>> steps{
      {1, derivatives}, {2, exactness}, {3, karcher}, {4, mollifier_ablation}, {5, fold},
      {6, membrane},    {7, coupling},  {8, voronoi}, {9, quadratic_signature}};
  for (const auto& [id, fn] : steps) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, "raised an exception", e.what());
    }
  }
  std::printf("%d of 9 criteria failed\n", failures);
  return failures ? 1 : 0;
}
