#include "geodiff/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geodiff {

namespace {

double rel(double a, double fd) { return std::abs(a - fd) / (1.0 + std::abs(a)); }

struct Eval {
  double g;
  VecX grad;  // w (6) then host coordinates of the reference vertex list
};

// Length and analytic gradient on a (possibly perturbed) mesh, straightened
// along the reference strip.
Eval eval(const TriangleMesh& mesh, const GeodesicOptions& gopts, const SurfacePoint& a, const SurfacePoint& b,
          const GeodesicPath& ref, const std::vector<int>& verts, bool want_grad) {
  GeodesicOptions o = gopts;
  o.steiner_points = 0;
  o.via_candidates = 0;
  GeodesicEngine eng(mesh, o);
  GeodesicPath p = eng.straighten(a, b, ref.faces, ref.crossings);
  Eval e;
  e.g = p.length;
  if (!want_grad) return e;
  JetOptions jo;
  jo.order = 1;
  jo.host = !verts.empty();
  DistanceJet j = distance_jet(mesh, p, o.mollifier, jo);
  e.grad = VecX::Zero(6 + 3 * verts.size());
  e.grad.head(6) = j.grad;
  for (size_t k = 0; k < j.verts.size(); ++k) {
    auto it = std::find(verts.begin(), verts.end(), j.verts[k]);
    if (it == verts.end()) continue;
    e.grad.segment(6 + 3 * (it - verts.begin()), 3) = j.grad_v.segment(3 * k, 3);
  }
  return e;
}

}  // namespace

JetCheck check_distance_jet(const GeodesicEngine& eng, const SurfacePoint& a, const SurfacePoint& b,
                            const JetCheckOptions& opts) {
  const TriangleMesh& mesh = eng.mesh();
  const Mollifier& mol = eng.options().mollifier;
  GeodesicPath path = eng.shortest(a, b);
  JetOptions jo;
  jo.host = opts.host;
  jo.order = opts.hessian ? 2 : 1;
  DistanceJet jet = distance_jet(mesh, path, mol, jo);

  JetCheck out;
  out.value = jet.value;
  out.crossings = static_cast<int>(path.crossings.size());
  const std::vector<int> verts = opts.host ? jet.verts : std::vector<int>{};
  const int n = 6 + 3 * static_cast<int>(verts.size());

  VecX grad(n);
  grad.head(6) = jet.grad;
  if (opts.host) grad.tail(n - 6) = jet.grad_v;
  MatX hess;
  if (opts.hessian) {
    hess = MatX::Zero(n, n);
    hess.topLeftCorner(6, 6) = jet.hess;
    if (opts.host) {
      hess.topRightCorner(6, n - 6) = jet.hess_wv;
      hess.bottomLeftCorner(n - 6, 6) = jet.hess_wv.transpose();
      hess.bottomRightCorner(n - 6, n - 6) = jet.hess_vv;
    }
    out.sym_err = (hess - hess.transpose()).norm() / std::max(hess.norm(), 1e-300);
  }

  const double band = 10 * (mol.enabled ? mol.eps : 0.0);
  out.hess_checked = opts.hessian;
  for (double t : path.t)
    if (std::min(t, 1 - t) <= band) out.hess_checked = false;

  auto perturbed = [&](int col, double h, bool want_grad) {
    SurfacePoint pa = a, pb = b;
    if (col < 3) {
      pa.w[col] += h;
      return eval(mesh, eng.options(), pa, pb, path, verts, want_grad);
    }
    if (col < 6) {
      pb.w[col - 3] += h;
      return eval(mesh, eng.options(), pa, pb, path, verts, want_grad);
    }
    std::vector<Vec3> pos = mesh.positions();
    pos[verts[(col - 6) / 3]][(col - 6) % 3] += h;
    return eval(mesh.with_positions(std::move(pos)), eng.options(), pa, pb, path, verts, want_grad);
  };

  for (int c = 0; c < n; ++c) {
    double fd = (perturbed(c, opts.h_grad, false).g - perturbed(c, -opts.h_grad, false).g) / (2 * opts.h_grad);
    out.grad_err = std::max(out.grad_err, rel(grad[c], fd));
  }
  if (out.hess_checked) {
    for (int c = 0; c < n; ++c) {
      VecX fd = (perturbed(c, opts.h_hess, true).grad - perturbed(c, -opts.h_hess, true).grad) / (2 * opts.h_hess);
      for (int r = 0; r < n; ++r) out.hess_err = std::max(out.hess_err, rel(hess(r, c), fd[r]));
    }
  }
  return out;
}

namespace {

State nudge(const EnergyProblem& problem, const State& x, int k, double h) {
  const DofLayout& L = problem.layout();
  State y = x;
  for (int i = 0; i < L.num_points(); ++i) {
    const int o = L.point_offset(i);
    if (o >= 0 && k >= o && k < o + 2) {
      Vec2 ab = Vec2::Zero();
      ab[k - o] = h;
      y.points[i].w += tangent_basis() * ab;
      return y;
    }
  }
  for (int v = 0; v < L.num_host(); ++v) {
    const int o = L.host_offset(v);
    if (o >= 0 && k >= o && k < o + 3) {
      y.host[v][k - o] += h;
      return y;
    }
  }
  throw std::out_of_range("no such degree of freedom");
}

}  // namespace

EnergyCheck check_energy(const EnergyProblem& problem, const State& x, const EnergyCheckOptions& opts) {
  const int n = problem.layout().size();
  Evaluation ev = problem.evaluate(x, opts.hessian ? 2 : 1);
  EnergyCheck out;
  out.value = ev.value;
  out.dofs = n;
  for (int k = 0; k < n; ++k) {
    const double h = opts.h_grad;
    double fd = (problem.evaluate(nudge(problem, x, k, h), 0).value -
                 problem.evaluate(nudge(problem, x, k, -h), 0).value) / (2 * h);
    out.grad_err = std::max(out.grad_err, rel(ev.grad[k], fd));
  }
  if (!opts.hessian) return out;
  MatX H = MatX(ev.hess);
  out.sym_err = (H - H.transpose()).norm() / std::max(H.norm(), 1e-300);
  for (int k = 0; k < n; ++k) {
    const double h = opts.h_hess;
    VecX fd = (problem.evaluate(nudge(problem, x, k, h), 1).grad - problem.evaluate(nudge(problem, x, k, -h), 1).grad) /
              (2 * h);
    for (int r = 0; r < n; ++r) out.hess_err = std::max(out.hess_err, rel(H(r, k), fd[r]));
  }
  return out;
}

}  // namespace geodiff
