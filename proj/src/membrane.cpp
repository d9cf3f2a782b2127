#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>

#include "geodiff/energy.hpp"
#include "geodiff/parallel.hpp"

namespace geodiff {

namespace {

// Rows e^T C e = l^2 in terms of (C11, C12, C22).
Mat3 length_system(const std::array<Vec2, 3>& e) {
  Mat3 M;
  for (int k = 0; k < 3; ++k) M.row(k) << e[k].x() * e[k].x(), 2 * e[k].x() * e[k].y(), e[k].y() * e[k].y();
  return M;
}

}  // namespace

Mat3 cauchy_green_inverse(const std::array<Vec2, 3>& e) {
  Mat3 M = length_system(e);
  double scale = 0;
  for (const auto& x : e) scale = std::max(scale, x.squaredNorm());
  if (!(std::abs(M.determinant()) > 1e-12 * scale * scale * scale))
    throw EnergyError("degenerate rest triangle");
  return M.inverse();
}

Vec3 cauchy_green(const std::array<Vec2, 3>& rest_edges, const Vec3& squared_lengths) {
  return cauchy_green_inverse(rest_edges) * squared_lengths;
}

double neo_hookean(const Vec3& c, const Material& m, Vec3* grad, Mat3* hess) {
  const double d = c[0] * c[2] - c[1] * c[1];
  if (!(d > 0)) return std::numeric_limits<double>::infinity();
  const double L = std::log(d);
  const double psi = 0.5 * m.mu * (c[0] + c[2] - 2 - L) + 0.125 * m.lambda * L * L;
  const Vec3 dd(c[2], -2 * c[1], c[0]);
  const Vec3 dL = dd / d;
  if (grad) *grad = 0.5 * m.mu * (Vec3(1, 0, 1) - dL) + 0.25 * m.lambda * L * dL;
  if (hess) {
    Mat3 d2d;
    d2d << 0, 0, 1, 0, -2, 0, 1, 0, 0;
    Mat3 d2L = d2d / d - dL * dL.transpose();
    *hess = -0.5 * m.mu * d2L + 0.25 * m.lambda * (dL * dL.transpose() + L * d2L);
  }
  return psi;
}

MembraneElement make_element(std::array<int, 3> v, const std::array<Vec2, 3>& p) {
  MembraneElement e;
  e.v = v;
  e.rest_edges = {p[1] - p[0], p[2] - p[1], p[0] - p[2]};
  Vec2 a = p[1] - p[0], b = p[2] - p[0];
  e.rest_area = 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
  if (!(e.rest_area > 0)) throw EnergyError("degenerate rest triangle");
  cauchy_green_inverse(e.rest_edges);
  return e;
}

MembraneElement element_from_lengths(std::array<int, 3> v, double l01, double l12, double l20) {
  double x = (l20 * l20 - l12 * l12 + l01 * l01) / (2 * l01);
  double y2 = l20 * l20 - x * x;
  if (!(y2 > 0)) throw EnergyError("edge lengths violate the triangle inequality");
  return make_element(v, {Vec2(0, 0), Vec2(l01, 0), Vec2(x, std::sqrt(y2))});
}

GeodesicMembrane::GeodesicMembrane(std::vector<MembraneElement> elements, Material mat)
    : elements_(std::move(elements)), mat_(mat) {
  if (!(mat_.mu > 0) || !(mat_.lambda > 0)) throw EnergyError("material parameters must be positive");
  std::map<std::pair<int, int>, int> id;
  for (const auto& el : elements_) {
    std::array<int, 3> ee{};
    for (int k = 0; k < 3; ++k) {
      int a = el.v[k], b = el.v[(k + 1) % 3];
      if (a == b) throw EnergyError("membrane element repeats a point");
      auto key = std::minmax(a, b);
      auto it = id.find(key);
      if (it == id.end()) {
        it = id.emplace(key, static_cast<int>(edges_.size())).first;
        edges_.push_back({key.first, key.second});
      }
      ee[k] = it->second;
    }
    element_edges_.push_back(ee);
  }
}

std::vector<Local> GeodesicMembrane::evaluate(const EvalContext& ctx) const {
  const int np = static_cast<int>(ctx.state.points.size());
  std::vector<Local> sq(edges_.size());
  parallel_for(edges_.size(), [&](std::size_t k) {
    const auto [a, b] = edges_[k];
    GeodesicPath p = ctx.engine.shortest(ctx.state.points[a], ctx.state.points[b]);
    JetOptions jo;
    jo.order = ctx.order;
    jo.host = ctx.host;
    sq[k] = local_from_jet(squared_distance_jet(ctx.mesh, p, ctx.mol, jo), a, b, np);
  });
  std::vector<Local> out(elements_.size());
  parallel_for(elements_.size(), [&](std::size_t k) {
    const auto& el = elements_[k];
    std::vector<Local> q;
    Vec3 s;
    for (int e = 0; e < 3; ++e) {
      q.push_back(sq[element_edges_[k][e]]);
      s[e] = q.back().value;
    }
    const Mat3 A = cauchy_green_inverse(el.rest_edges);
    Vec3 g;
    Mat3 H;
    double psi = neo_hookean(A * s, mat_, &g, &H);
    if (!std::isfinite(psi)) {
      out[k].value = psi;
      return;
    }
    VecX df = el.rest_area * A.transpose() * g;
    MatX ddf = el.rest_area * A.transpose() * H * A;
    out[k] = chain(q, el.rest_area * psi, df, ddf, ctx.order);
  });
  return out;
}

std::vector<double> GeodesicMembrane::densities(const EvalContext& ctx) const {
  std::vector<double> out(elements_.size());
  parallel_for(elements_.size(), [&](std::size_t k) {
    const auto& el = elements_[k];
    Vec3 s;
    JetOptions jo;
    jo.order = 0;
    for (int e = 0; e < 3; ++e) {
      int a = el.v[e], b = el.v[(e + 1) % 3];
      GeodesicPath p = ctx.engine.shortest(ctx.state.points[a], ctx.state.points[b]);
      s[e] = squared_distance_jet(ctx.mesh, p, ctx.mol, jo).value;
    }
    out[k] = neo_hookean(cauchy_green(el.rest_edges, s), mat_);
  });
  return out;
}

}  // namespace geodiff
