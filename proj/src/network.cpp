#include "geodiff/energy.hpp"
#include "geodiff/parallel.hpp"

namespace geodiff {

SpringNetwork::SpringNetwork(std::vector<Spring> springs, bool euclidean)
    : springs_(std::move(springs)), euclidean_(euclidean) {
  for (const auto& s : springs_) {
    if (s.i == s.j) throw EnergyError("spring connects point " + std::to_string(s.i) + " to itself");
    if (s.rest < 0) throw EnergyError("negative rest length");
  }
}

std::vector<Local> SpringNetwork::evaluate(const EvalContext& ctx) const {
  const int np = static_cast<int>(ctx.state.points.size());
  std::vector<Local> out(springs_.size());
  parallel_for(springs_.size(), [&](std::size_t k) {
    const Spring& s = springs_[k];
    const SurfacePoint& a = ctx.state.points[s.i];
    const SurfacePoint& b = ctx.state.points[s.j];
    GeodesicPath path = euclidean_ ? chord_path(ctx.mesh, a, b, ctx.mol) : ctx.engine.shortest(a, b);
    JetOptions jo;
    jo.order = ctx.order;
    jo.host = ctx.host;
    DistanceJet j;
    if (s.rest == 0.0) {
      // zero rest length: k g^2 straight from the squared jet, fine at g = 0
      DistanceJet q = squared_distance_jet(ctx.mesh, path, ctx.mol, jo);
      j = compose(q, s.stiffness * q.value, s.stiffness, 0.0);
    } else {
      DistanceJet g = distance_jet(ctx.mesh, path, ctx.mol, jo);
      double r = g.value - s.rest;
      j = compose(g, s.stiffness * r * r, 2 * s.stiffness * r, 2 * s.stiffness);
    }
    out[k] = local_from_jet(j, s.i, s.j, np);
  });
  return out;
}

std::shared_ptr<SpringNetwork> karcher_term(int num_anchors) {
  if (num_anchors < 1) throw EnergyError("karcher mean needs at least one anchor");
  std::vector<Spring> springs;
  for (int i = 1; i <= num_anchors; ++i) springs.push_back({0, i, 0.0, 0.5 / num_anchors});
  return std::make_shared<SpringNetwork>(std::move(springs));
}

}  // namespace geodiff
