#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "geodiff/generators.hpp"
#include "geodiff/solver.hpp"

using namespace geodiff;

namespace {

// Free point 0 tied by zero-length springs to fixed anchors on a flat grid.
EnergyProblem planar_bowl(const TriangleMesh& m, int anchors) {
  EnergyProblem prob(m);
  std::vector<Spring> s;
  for (int i = 1; i <= anchors; ++i) s.push_back({0, i, 0.0, 1.0});
  prob.add(std::make_shared<SpringNetwork>(s));
  std::vector<char> fixed(anchors + 1, 1);
  fixed[0] = 0;
  prob.set_layout(anchors + 1, fixed);
  return prob;
}

bool non_increasing(const SolveResult& r) {
  for (size_t k = 1; k < r.trace.size(); ++k)
    if (r.trace[k].energy > r.trace[k - 1].energy) return false;
  return true;
}

}  // namespace

TEST_CASE("Newton solves a planar zero-length spring in one step") {
  TriangleMesh m = make_grid(4, 4);
  EnergyProblem prob = planar_bowl(m, 1);
  State x = prob.initial_state({closest_point(m, Vec3(0.2, 0.15, 0)), closest_point(m, Vec3(0.63, 0.71, 0))});
  SolverConfig cfg;
  cfg.tolerance = 1e-9;
  SolveResult r = minimize(prob, x, cfg);
  CHECK(r.status == Status::Converged);
  CHECK(r.iterations == 1);
  CHECK((embed(m, r.state.points[0]) - Vec3(0.63, 0.71, 0)).norm() < 1e-9);
}

TEST_CASE("all methods find the planar centroid with non-increasing energy") {
  TriangleMesh m = make_grid(6, 6);
  EnergyProblem prob = planar_bowl(m, 3);
  Vec3 a(0.1, 0.2, 0), b(0.9, 0.3, 0), c(0.4, 0.85, 0);
  State x = prob.initial_state(
      {closest_point(m, Vec3(0.93, 0.91, 0)), closest_point(m, a), closest_point(m, b), closest_point(m, c)});
  for (Method method : {Method::Newton, Method::LBFGS, Method::GradientDescent}) {
    CAPTURE(to_string(method));
    SolverConfig cfg;
    cfg.method = method;
    cfg.tolerance = 1e-8;
    cfg.max_iterations = 500;
    SolveResult r = minimize(prob, x, cfg);
    CHECK(r.status == Status::Converged);
    CHECK(non_increasing(r));
    CHECK((embed(m, r.state.points[0]) - (a + b + c) / 3).norm() < 1e-6);
    for (size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k].alpha > 0);
  }
}

TEST_CASE("L-BFGS carries its history across faces on a sphere") {
  TriangleMesh m = make_icosphere(2);
  EnergyProblem prob(m);
  prob.add(karcher_term(3));
  prob.set_layout(4, {0, 1, 1, 1});
  State x = prob.initial_state({locate_direction(m, Vec3(0.1, 0.9, 0.9)), locate_direction(m, Vec3(1, 0, 0.4)),
                                locate_direction(m, Vec3(0.2, 1, 0.3)), locate_direction(m, Vec3(0.5, 0.3, 1))});
  SolverConfig cfg;
  cfg.method = Method::LBFGS;
  cfg.tolerance = 1e-9;
  SolveResult r = minimize(prob, x, cfg);
  CHECK(r.status == Status::Converged);
  CHECK(non_increasing(r));
  // distances on a polyhedron have ridges behind curved vertices, so the
  // Karcher energy can have several nearby minima; Newton started from the
  // L-BFGS answer must stay there
  cfg.method = Method::Newton;
  SolveResult n = minimize(prob, r.state, cfg);
  CHECK(n.status == Status::Converged);
  CHECK(n.iterations <= 1);
  CHECK((embed(m, r.state.points[0]) - embed(m, n.state.points[0])).norm() < 1e-8);
}

TEST_CASE("two-loop recursion") {
  VecX g(3);
  g << 1, -2, 0.5;
  CHECK((lbfgs_direction({}, {}, g) + g).norm() == 0.0);
  // one exact pair of the quadratic diag(2, 4, 8): the scaled step is exact along s
  VecX s(3), y(3);
  s << 0, 1, 0;
  y << 0, 4, 0;
  VecX d = lbfgs_direction({s}, {y}, g);
  CHECK(d[1] == doctest::Approx(0.5));
}

TEST_CASE("status, iteration cap and bad input") {
  TriangleMesh m = make_grid(6, 6);
  EnergyProblem prob = planar_bowl(m, 3);
  State x = prob.initial_state({closest_point(m, Vec3(0.93, 0.91, 0)), closest_point(m, Vec3(0.1, 0.2, 0)),
                                closest_point(m, Vec3(0.9, 0.3, 0)), closest_point(m, Vec3(0.4, 0.85, 0))});
  SolverConfig cfg;
  cfg.method = Method::GradientDescent;
  cfg.tolerance = 1e-12;
  cfg.max_iterations = 2;
  SolveResult r = minimize(prob, x, cfg);
  CHECK(r.status == Status::Capped);
  CHECK(r.trace.size() == 3);
  CHECK(std::string(to_string(r.status)) == "capped");

  cfg.tolerance = 0;
  CHECK_THROWS_AS(minimize(prob, x, cfg), SolverError);
  CHECK_THROWS_AS(parse_method("bfgs"), SolverError);
  CHECK(parse_method("lbfgs") == Method::LBFGS);

  std::ostringstream csv;
  write_trace_csv(r.trace, csv);
  std::string head;
  std::getline(std::istringstream(csv.str()) >> std::ws, head);
  CHECK(head == "iteration,energy,grad_norm,alpha,beta,ms");
}

TEST_CASE("shifted Newton escapes an indefinite start") {
  // spring with positive rest length, points almost on top of each other:
  // the Hessian of (g - r)^2 is indefinite there
  TriangleMesh m = make_grid(6, 6);
  EnergyProblem prob(m);
  prob.add(std::make_shared<SpringNetwork>(std::vector<Spring>{{0, 1, 0.4, 1.0}}));
  prob.set_layout(2, {0, 1});
  State x = prob.initial_state({closest_point(m, Vec3(0.52, 0.51, 0)), closest_point(m, Vec3(0.5, 0.5, 0))});
  SolverConfig cfg;
  cfg.tolerance = 1e-9;
  SolveResult r = minimize(prob, x, cfg);
  CHECK(r.status == Status::Converged);
  CHECK(non_increasing(r));
  bool shifted = false;
  for (const auto& t : r.trace) shifted = shifted || t.beta > 0;
  CHECK(shifted);
  CHECK((embed(m, r.state.points[0]) - Vec3(0.5, 0.5, 0)).norm() == doctest::Approx(0.4).epsilon(1e-8));
}

TEST_CASE("L-BFGS on a planar bowl") {
  TriangleMesh m = make_grid(6, 6);
  EnergyProblem prob = planar_bowl(m, 3);
  State x = prob.initial_state({closest_point(m, Vec3(0.93, 0.91, 0)), closest_point(m, Vec3(0.1, 0.2, 0)),
                                closest_point(m, Vec3(0.9, 0.3, 0)), closest_point(m, Vec3(0.4, 0.85, 0))});
  SolverConfig cfg;
  cfg.method = Method::LBFGS;
  cfg.lbfgs_memory = 10;
  cfg.tolerance = 1e-10;
  SolveResult r = minimize(prob, x, cfg);
  CHECK(r.status == Status::Converged);
  CHECK(r.iterations <= 5);
  CHECK((embed(m, r.state.points[0]) - Vec3(1.4 / 3, 1.35 / 3, 0)).norm() < 1e-9);
}
