#include <Eigen/Dense>
#include <cmath>

#include "geodiff/energy.hpp"
#include "geodiff/parallel.hpp"

namespace geodiff {

namespace {

Mat3 skew(const Vec3& a) {
  Mat3 m;
  m << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return m;
}

}  // namespace

double enclosed_volume(const TriangleMesh& mesh) {
  double v = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.face(f);
    v += mesh.position(t[0]).dot(mesh.position(t[1]).cross(mesh.position(t[2])));
  }
  return v / 6;
}

HostEnergy::HostEnergy(const TriangleMesh& topology, HostModel model) : model_(std::move(model)) {
  if (model_.rest.empty()) model_.rest = topology.positions();
  if (static_cast<int>(model_.rest.size()) != topology.num_vertices())
    throw EnergyError("host rest state has the wrong vertex count");
  for (int f = 0; f < topology.num_faces(); ++f) {
    const auto& t = topology.face(f);
    auto len = [&](int a, int b) { return (model_.rest[t[b]] - model_.rest[t[a]]).norm(); };
    MembraneElement e = element_from_lengths({0, 1, 2}, len(0, 1), len(1, 2), len(2, 0));
    rest_edges_.push_back(e.rest_edges);
    rest_area_.push_back(e.rest_area);
  }
}

std::vector<Local> HostEnergy::evaluate(const EvalContext& ctx) const {
  const TriangleMesh& mesh = ctx.mesh;
  const int np = static_cast<int>(ctx.state.points.size());
  const int order = ctx.host ? ctx.order : 0;
  std::vector<Local> out(mesh.num_faces() + 1);
  parallel_for(mesh.num_faces(), [&](std::size_t f) {
    const auto& t = mesh.face(static_cast<int>(f));
    std::vector<Local> q(3);
    Vec3 s;
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      Vec3 d = mesh.position(b) - mesh.position(a);
      Local& l = q[e];
      s[e] = l.value = d.squaredNorm();
      for (int x : {a, b})
        for (int k = 0; k < 3; ++k) l.idx.push_back(host_index(np, x, k));
      l.grad.resize(6);
      l.grad << -2 * d, 2 * d;
      l.hess = MatX::Zero(6, 6);
      l.hess.topLeftCorner(3, 3) = l.hess.bottomRightCorner(3, 3) = 2 * Mat3::Identity();
      l.hess.topRightCorner(3, 3) = l.hess.bottomLeftCorner(3, 3) = -2 * Mat3::Identity();
    }
    Mat3 A = cauchy_green_inverse(rest_edges_[f]);
    Vec3 g;
    Mat3 H;
    double psi = neo_hookean(A * s, model_.material, &g, &H);
    if (!std::isfinite(psi)) {
      out[f].value = psi;
      return;
    }
    const double area = rest_area_[f];
    out[f] = chain(q, area * psi, area * A.transpose() * g, area * A.transpose() * H * A, order);
  });

  // enclosed volume penalty, one dense block over all vertices
  Local& vol = out.back();
  if (model_.volume_weight > 0) {
    const int nv = mesh.num_vertices();
    const double V = enclosed_volume(mesh), r = V - model_.rest_volume;
    vol.value = 0.5 * model_.volume_weight * r * r;
    if (order >= 1) {
      for (int v = 0; v < nv; ++v)
        for (int k = 0; k < 3; ++k) vol.idx.push_back(host_index(np, v, k));
      VecX dV = VecX::Zero(3 * nv);
      MatX d2V;
      if (order >= 2) d2V = MatX::Zero(3 * nv, 3 * nv);
      for (int f = 0; f < mesh.num_faces(); ++f) {
        const auto& t = mesh.face(f);
        for (int i = 0; i < 3; ++i) {
          const Vec3& p1 = mesh.position(t[(i + 1) % 3]);
          const Vec3& p2 = mesh.position(t[(i + 2) % 3]);
          dV.segment<3>(3 * t[i]) += p1.cross(p2) / 6;
          if (order >= 2) {
            d2V.block<3, 3>(3 * t[i], 3 * t[(i + 1) % 3]) -= skew(p2) / 6;
            d2V.block<3, 3>(3 * t[i], 3 * t[(i + 2) % 3]) += skew(p1) / 6;
          }
        }
      }
      vol.grad = model_.volume_weight * r * dV;
      if (order >= 2) vol.hess = model_.volume_weight * (dV * dV.transpose() + r * d2V);
    }
  }
  return out;
}

}  // namespace geodiff
