#pragma once

#include "geodiff/distance_jet.hpp"
#include "geodiff/energy.hpp"

namespace geodiff {

// Finite-difference checks of distance jets. Errors are max over entries of
// |analytic - fd| / (1 + |analytic|).
struct JetCheck {
  double value = 0.0;
  double grad_err = 0.0;
  double hess_err = 0.0;
  double sym_err = 0.0;  // relative asymmetry of the analytic Hessian
  bool hess_checked = false;  // false when a crossing sits in a mollifier band
  int crossings = 0;
};

struct JetCheckOptions {
  double h_grad = 1e-5;
  double h_hess = 1e-4;
  bool hessian = true;
  bool host = false;  // also check the host-vertex blocks
};

JetCheck check_distance_jet(const GeodesicEngine& eng, const SurfacePoint& a, const SurfacePoint& b,
                            const JetCheckOptions& opts = {});

// Same for a whole energy in reduced coordinates. Points move inside their
// face (no tracing), so they should sit a little away from face edges.
struct EnergyCheck {
  double value = 0.0;
  double grad_err = 0.0;
  double hess_err = 0.0;
  double sym_err = 0.0;
  int dofs = 0;
};

struct EnergyCheckOptions {
  double h_grad = 1e-5;
  double h_hess = 1e-4;
  bool hessian = true;
};

EnergyCheck check_energy(const EnergyProblem& problem, const State& x, const EnergyCheckOptions& opts = {});

}  // namespace geodiff
