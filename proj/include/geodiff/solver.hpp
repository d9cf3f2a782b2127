#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "geodiff/energy.hpp"

namespace geodiff {

enum class Method { Newton, GradientDescent, LBFGS };
enum class Status { Converged, Capped, Stalled };

const char* to_string(Method m);
const char* to_string(Status s);
Method parse_method(const std::string& s);  // newton | gd | lbfgs

struct SolverConfig {
  Method method = Method::Newton;
  double tolerance = 1e-6;  // on the max-norm of the reduced gradient
  int max_iterations = 200;
  double shrink = 0.5;     // line search
  double armijo = 1e-4;
  double alpha_min = 1e-12;
  double beta0 = 1e-6;  // Hessian shift
  double beta_grow = 10.0;
  double beta_shrink = 0.5;
  int lbfgs_memory = 10;
};

struct IterationRecord {
  int iteration = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double ms = 0.0;
};

struct SolveResult {
  State state;
  Status status = Status::Capped;
  int iterations = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  std::vector<IterationRecord> trace;  // entry 0 is the initial state
  std::string message;
};

// max abs gradient entry strictly below the tolerance
bool check_convergence(const VecX& grad, const SolverConfig& cfg);

// Move along a reduced direction: points by tracing, host vertices additively.
struct Retraction {
  State state;
  std::vector<int> from_face, to_face;
  std::vector<Mat3> rotation;
};
Retraction retract(const EnergyProblem& problem, const State& x, const VecX& dir, double alpha);

// Two-loop recursion; pairs with y^T s <= 1e-12 are skipped.
VecX lbfgs_direction(const std::vector<VecX>& s, const std::vector<VecX>& y, const VecX& grad);

using IterationCallback = std::function<void(const State&, const IterationRecord&)>;

SolveResult minimize(const EnergyProblem& problem, State x0, const SolverConfig& cfg,
                     const IterationCallback& callback = {});

void write_trace_csv(const std::vector<IterationRecord>& trace, std::ostream& out);

}  // namespace geodiff
