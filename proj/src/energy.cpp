#include "geodiff/energy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace geodiff {

Local local_from_jet(const DistanceJet& jet, int i, int j, int np) {
  Local l;
  const int nv = static_cast<int>(jet.verts.size());
  const bool host = jet.grad_v.size() > 0;
  const int n = 6 + (host ? 3 * nv : 0);
  l.idx.reserve(n);
  for (int c = 0; c < 3; ++c) l.idx.push_back(point_index(i, c));
  for (int c = 0; c < 3; ++c) l.idx.push_back(point_index(j, c));
  if (host)
    for (int v : jet.verts)
      for (int d = 0; d < 3; ++d) l.idx.push_back(host_index(np, v, d));
  l.value = jet.value;
  l.grad = VecX::Zero(n);
  l.grad.head(6) = jet.grad;
  if (host) l.grad.tail(3 * nv) = jet.grad_v;
  l.hess = MatX::Zero(n, n);
  l.hess.topLeftCorner(6, 6) = jet.hess;
  if (host && jet.hess_vv.size()) {
    l.hess.topRightCorner(6, 3 * nv) = jet.hess_wv;
    l.hess.bottomLeftCorner(3 * nv, 6) = jet.hess_wv.transpose();
    l.hess.bottomRightCorner(3 * nv, 3 * nv) = jet.hess_vv;
  }
  return l;
}

Local chain(const std::vector<Local>& q, double f, const VecX& df, const MatX& ddf, int order) {
  Local out;
  out.value = f;
  if (order <= 0) return out;
  std::map<int, int> where;
  for (const auto& l : q)
    for (int i : l.idx)
      if (!where.count(i)) {
        where[i] = static_cast<int>(out.idx.size());
        out.idx.push_back(i);
      }
  const int n = static_cast<int>(out.idx.size());
  std::vector<VecX> G(q.size(), VecX::Zero(n));
  for (size_t e = 0; e < q.size(); ++e)
    for (size_t k = 0; k < q[e].idx.size(); ++k) G[e][where[q[e].idx[k]]] = q[e].grad[k];
  out.grad = VecX::Zero(n);
  for (size_t e = 0; e < q.size(); ++e) out.grad += df[e] * G[e];
  if (order < 2) return out;
  out.hess = MatX::Zero(n, n);
  for (size_t e = 0; e < q.size(); ++e) {
    std::vector<int> pos(q[e].idx.size());
    for (size_t k = 0; k < pos.size(); ++k) pos[k] = where[q[e].idx[k]];
    for (size_t a = 0; a < pos.size(); ++a)
      for (size_t b = 0; b < pos.size(); ++b) out.hess(pos[a], pos[b]) += df[e] * q[e].hess(a, b);
    for (size_t e2 = 0; e2 < q.size(); ++e2)
      if (ddf(e, e2) != 0.0) out.hess += ddf(e, e2) * G[e] * G[e2].transpose();
  }
  return out;
}

DofLayout::DofLayout(int np, int nv, std::vector<char> point_fixed, std::vector<char> host_fixed, bool host_free)
    : np_(np), nv_(host_free ? nv : 0), host_free_(host_free) {
  point_fixed.resize(np, 0);
  point_off_.assign(np, -1);
  std::vector<Eigen::Triplet<double>> trip;
  const auto B = tangent_basis();
  for (int i = 0; i < np; ++i) {
    if (point_fixed[i]) continue;
    point_off_[i] = n_;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 2; ++c)
        if (B(r, c) != 0.0) trip.emplace_back(point_index(i, r), n_ + c, B(r, c));
    n_ += 2;
  }
  if (host_free) {
    host_fixed.resize(nv, 0);
    host_off_.assign(nv, -1);
    for (int v = 0; v < nv; ++v) {
      if (host_fixed[v]) continue;
      host_off_[v] = n_;
      for (int d = 0; d < 3; ++d) trip.emplace_back(host_index(np, v, d), n_ + d, 1.0);
      n_ += 3;
    }
  }
  P_.resize(full_size(), n_);
  P_.setFromTriplets(trip.begin(), trip.end());
}

EnergyProblem::EnergyProblem(TriangleMesh host, GeodesicOptions geo)
    : base_(std::move(host)), geo_(geo), rigid_(std::make_shared<GeodesicEngine>(base_, geo_)) {}

void EnergyProblem::set_layout(int num_points, std::vector<char> point_fixed, bool host_free,
                               std::vector<char> host_fixed) {
  layout_ = DofLayout(num_points, base_.num_vertices(), std::move(point_fixed), std::move(host_fixed), host_free);
}

State EnergyProblem::initial_state(std::vector<SurfacePoint> points) const {
  return State{std::move(points), base_.positions()};
}

TriangleMesh EnergyProblem::mesh_at(const State& s) const {
  if (!layout_.host_free() || s.host.empty()) return base_;
  return base_.with_positions(s.host);
}

Evaluation EnergyProblem::evaluate(const State& s, int order) const { return run(s, order, true); }
Evaluation EnergyProblem::evaluate_full(const State& s, int order) const { return run(s, order, false); }

Evaluation EnergyProblem::run(const State& s, int order, bool reduce) const {
  if (static_cast<int>(s.points.size()) != layout_.num_points())
    throw EnergyError("state has " + std::to_string(s.points.size()) + " points, layout expects " +
                      std::to_string(layout_.num_points()));
  const bool host = layout_.host_free();
  std::shared_ptr<GeodesicEngine> eng = rigid_;
  if (host) eng = std::make_shared<GeodesicEngine>(base_.with_positions(s.host), geo_);
  EvalContext ctx{eng->mesh(), *eng, s, geo_.mollifier, host, order};

  Evaluation ev;
  const int nf = layout_.full_size();
  VecX grad = VecX::Zero(nf);
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& term : terms_) {
    double tv = 0;
    for (const Local& l : term->evaluate(ctx)) {
      tv += l.value;
      if (!std::isfinite(l.value)) continue;
      if (order >= 1)
        for (size_t a = 0; a < l.idx.size(); ++a) grad[l.idx[a]] += l.grad[a];
      if (order >= 2)
        for (size_t a = 0; a < l.idx.size(); ++a)
          for (size_t b = 0; b < l.idx.size(); ++b)
            if (l.hess(a, b) != 0.0) trip.emplace_back(l.idx[a], l.idx[b], l.hess(a, b));
    }
    ev.terms.emplace_back(term->name(), tv);
    ev.value += tv;
  }
  ev.finite = std::isfinite(ev.value);
  if (!ev.finite) {
    ev.value = std::numeric_limits<double>::infinity();
    return ev;
  }
  Eigen::SparseMatrix<double> H;
  if (order >= 2) {
    H.resize(nf, nf);
    H.setFromTriplets(trip.begin(), trip.end());
  }
  if (!reduce) {
    if (order >= 1) ev.grad = grad;
    if (order >= 2) ev.hess = H;
    return ev;
  }
  const auto& P = layout_.projection();
  if (order >= 1) ev.grad = P.transpose() * grad;
  if (order >= 2) ev.hess = Eigen::SparseMatrix<double>(P.transpose() * H * P);
  return ev;
}

}  // namespace geodiff
