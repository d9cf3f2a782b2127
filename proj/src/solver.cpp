#include "geodiff/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>
#include <deque>
#include <ostream>

#include "geodiff/trace.hpp"

namespace geodiff {

const char* to_string(Method m) {
  switch (m) {
    case Method::Newton: return "newton";
    case Method::GradientDescent: return "gd";
    case Method::LBFGS: return "lbfgs";
  }
  return "?";
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::Capped: return "capped";
    case Status::Stalled: return "stalled";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "newton") return Method::Newton;
  if (s == "gd" || s == "gradient_descent") return Method::GradientDescent;
  if (s == "lbfgs" || s == "l-bfgs") return Method::LBFGS;
  throw SolverError("unknown method '" + s + "' (expected newton, gd or lbfgs)");
}

bool check_convergence(const VecX& grad, const SolverConfig& cfg) {
  return grad.size() == 0 || grad.lpNorm<Eigen::Infinity>() < cfg.tolerance;
}

Retraction retract(const EnergyProblem& problem, const State& x, const VecX& dir, double alpha) {
  const DofLayout& L = problem.layout();
  const int np = L.num_points();
  Retraction r;
  r.state = x;
  r.from_face.resize(np);
  r.to_face.resize(np);
  r.rotation.assign(np, Mat3::Identity());
  const TriangleMesh mesh = problem.mesh_at(x);
  const auto B = tangent_basis();
  for (int i = 0; i < np; ++i) {
    r.from_face[i] = r.to_face[i] = x.points[i].face;
    const int o = L.point_offset(i);
    if (o < 0) continue;
    const Vec2 ab = alpha * dir.segment<2>(o);
    if (ab.squaredNorm() == 0.0) continue;
    TraceResult t = trace(mesh, x.points[i], B * ab);
    r.state.points[i] = t.end;
    r.to_face[i] = t.end.face;
    r.rotation[i] = t.transport;
  }
  if (L.host_free())
    for (int v = 0; v < L.num_host(); ++v) {
      const int o = L.host_offset(v);
      if (o >= 0) r.state.host[v] += alpha * dir.segment<3>(o);
    }
  return r;
}

VecX lbfgs_direction(const std::vector<VecX>& s, const std::vector<VecX>& y, const VecX& grad) {
  VecX q = grad;
  const int m = static_cast<int>(s.size());
  std::vector<double> a(m, 0.0), rho(m, 0.0);
  for (int k = m - 1; k >= 0; --k) {
    const double ys = y[k].dot(s[k]);
    if (!(ys > 1e-12)) continue;
    rho[k] = 1.0 / ys;
    a[k] = rho[k] * s[k].dot(q);
    q -= a[k] * y[k];
  }
  double gamma = 1.0;
  for (int k = m - 1; k >= 0; --k)
    if (rho[k] > 0) {
      gamma = 1.0 / (rho[k] * y[k].squaredNorm());
      break;
    }
  VecX r = gamma * q;
  for (int k = 0; k < m; ++k) {
    if (rho[k] == 0.0) continue;
    const double b = rho[k] * y[k].dot(r);
    r += (a[k] - b) * s[k];
  }
  return -r;
}

namespace {

using Clock = std::chrono::steady_clock;

// (H + beta I) d = -g, growing beta until the factorization succeeds and d
// points downhill.
bool newton_direction(const Eigen::SparseMatrix<double>& H, const VecX& g, const SolverConfig& cfg, double& beta,
                      VecX& d, int attempts = 60) {
  const int n = static_cast<int>(g.size());
  for (int attempt = 0; attempt < attempts; ++attempt) {
    bool ok = false;
    if (n <= 1000) {
      MatX A = MatX(H);
      A.diagonal().array() += beta;
      Eigen::LLT<MatX> llt(A);
      if (llt.info() == Eigen::Success) {
        d = llt.solve(-g);
        ok = true;
      }
    } else {
      Eigen::SparseMatrix<double> I(n, n);
      I.setIdentity();
      Eigen::SparseMatrix<double> A = H + beta * I;
      Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
      if (llt.info() == Eigen::Success) {
        d = llt.solve(-g);
        ok = llt.info() == Eigen::Success;
      }
    }
    if (ok && d.allFinite() && g.dot(d) < 0) return true;
    beta = beta < cfg.beta0 ? cfg.beta0 : beta * cfg.beta_grow;
  }
  return false;
}

// Rewrites the tangent blocks of a reduced vector in the frames after a step.
void transport(const DofLayout& L, const TriangleMesh& mesh, const Retraction& r, VecX& v, bool covector) {
  for (int i = 0; i < L.num_points(); ++i) {
    const int o = L.point_offset(i);
    if (o < 0 || r.from_face[i] == r.to_face[i]) continue;
    Mat2 J = transport_jacobian(mesh, r.from_face[i], r.to_face[i], r.rotation[i]);
    Vec2 b = v.segment<2>(o);
    v.segment<2>(o) = covector ? Vec2(J.inverse().transpose() * b) : Vec2(J * b);
  }
}

}  // namespace

SolveResult minimize(const EnergyProblem& problem, State x0, const SolverConfig& cfg,
                     const IterationCallback& callback) {
  if (cfg.max_iterations < 0) throw SolverError("max_iterations must be non-negative");
  if (!(cfg.tolerance > 0)) throw SolverError("tolerance must be positive");
  const bool newton = cfg.method == Method::Newton;
  const int order = newton ? 2 : 1;

  SolveResult res;
  res.state = std::move(x0);
  auto t0 = Clock::now();
  Evaluation ev = problem.evaluate(res.state, order);
  if (!ev.finite) throw SolverError("initial state has infinite energy (inverted element?)");

  auto record = [&](int it, double alpha, double beta) {
    IterationRecord rec;
    rec.iteration = it;
    rec.energy = ev.value;
    rec.grad_norm = ev.grad.size() ? ev.grad.lpNorm<Eigen::Infinity>() : 0.0;
    rec.alpha = alpha;
    rec.beta = beta;
    rec.ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    res.trace.push_back(rec);
    if (callback) callback(res.state, rec);
    t0 = Clock::now();
  };
  record(0, 0.0, 0.0);

  double beta = 0.0;
  std::deque<VecX> S, Y;
  res.status = Status::Capped;
  for (int it = 1;; ++it) {
    if (check_convergence(ev.grad, cfg)) {
      res.status = Status::Converged;
      break;
    }
    if (it > cfg.max_iterations) break;

    VecX d;
    double used_beta = 0.0;
    if (newton) {
      beta *= cfg.beta_shrink;
      if (beta < cfg.beta0) beta = 0.0;
      // The plain Newton step goes first: a shift that only relaxes by half
      // per step would leave the final iterations linearly convergent.
      double plain = 0.0;
      if (beta > 0 && newton_direction(ev.hess, ev.grad, cfg, plain, d, 1)) {
        used_beta = 0.0;
      } else if (!newton_direction(ev.hess, ev.grad, cfg, beta, d)) {
        res.status = Status::Stalled;
        res.message = "no descent direction from the shifted Hessian";
        break;
      } else {
        used_beta = beta;
      }
    } else if (cfg.method == Method::LBFGS) {
      d = lbfgs_direction({S.begin(), S.end()}, {Y.begin(), Y.end()}, ev.grad);
      if (!(ev.grad.dot(d) < 0)) {
        S.clear();
        Y.clear();
        d = -ev.grad;
      }
    } else {
      d = -ev.grad;
    }

    const double E0 = ev.value;
    const double slope = ev.grad.dot(d);
    const double noise = 1e-12 * (1.0 + std::abs(E0));
    double alpha = 1.0;
    bool accepted = false;
    Retraction r;
    double E1 = 0;
    while (alpha >= cfg.alpha_min) {
      bool ok = true;
      try {
        r = retract(problem, res.state, d, alpha);
      } catch (const TraceError&) {
        ok = false;
      }
      if (ok) {
        Evaluation trial = problem.evaluate(r.state, 0);
        E1 = trial.value;
        // the second clause accepts steps whose predicted decrease is below
        // rounding, as long as the energy does not go up
        if (trial.finite && (E1 <= E0 + cfg.armijo * alpha * slope || (alpha * -slope < noise && E1 <= E0))) {
          accepted = true;
          break;
        }
      }
      alpha *= cfg.shrink;
    }
    if (!accepted) {
      res.status = Status::Stalled;
      res.message = "line search fell below alpha_min";
      break;
    }

    VecX g_old = ev.grad;
    res.state = std::move(r.state);
    ev = problem.evaluate(res.state, order);
    if (cfg.method == Method::LBFGS) {
      const TriangleMesh mesh = problem.mesh_at(res.state);
      const DofLayout& L = problem.layout();
      VecX s = alpha * d;
      transport(L, mesh, r, s, false);
      transport(L, mesh, r, g_old, true);
      for (auto& v : S) transport(L, mesh, r, v, false);
      for (auto& v : Y) transport(L, mesh, r, v, true);
      S.push_back(s);
      Y.push_back(ev.grad - g_old);
      while (static_cast<int>(S.size()) > cfg.lbfgs_memory) {
        S.pop_front();
        Y.pop_front();
      }
    }
    res.iterations = it;
    record(it, alpha, used_beta);
  }
  res.energy = ev.value;
  res.grad_norm = res.trace.back().grad_norm;
  return res;
}

void write_trace_csv(const std::vector<IterationRecord>& trace, std::ostream& out) {
  out << "iteration,energy,grad_norm,alpha,beta,ms\n";
  out.precision(17);
  for (const auto& r : trace)
    out << r.iteration << ',' << r.energy << ',' << r.grad_norm << ',' << r.alpha << ',' << r.beta << ','
        << r.ms << '\n';
}

}  // namespace geodiff
