#include "geodiff/distance_jet.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace geodiff {

namespace {

// Normalized mollified weights u(w) = m(w) / sum m(w): Jacobian and second derivatives.
struct WeightMap {
  Vec3 u;
  Mat3 D;                  // du_i / dw_j
  std::array<Mat3, 3> H;   // d2 u_i / dw dw
};

WeightMap weight_map(const Vec3& w, const Mollifier& mol) {
  Vec3 m, q, r;
  for (int i = 0; i < 3; ++i) {
    m[i] = mol.value(w[i]);
    q[i] = mol.d1(w[i]);
    r[i] = mol.d2(w[i]);
  }
  const double s = m.sum();
  WeightMap out;
  out.u = m / s;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.D(i, j) = (i == j ? q[j] / s : 0.0) - m[i] * q[j] / (s * s);
  for (int i = 0; i < 3; ++i) {
    Mat3& Hi = out.H[i];
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        double v = 2 * m[i] * q[j] * q[k] / (s * s * s);
        if (i == j && j == k) v += r[j] / s;
        if (i == j) v -= q[j] * q[k] / (s * s);
        if (i == k) v -= q[i] * q[j] / (s * s);
        if (j == k) v -= m[i] * r[j] / (s * s);
        Hi(j, k) = v;
      }
  }
  return out;
}

struct Entry {
  int col;
  Vec3 d;  // dP/dQ_col
};

struct Node {
  Vec3 p;
  std::vector<Entry> J;
  // Mixed second derivatives: (col_a, col_b, dimension, coefficient) meaning
  // d2 P_dim / dQ_a dQ_b = coefficient.
  struct Mixed {
    int a, b, dim;
    double c;
  };
  std::vector<Mixed> M;
};

struct Assembly {
  double value = 0;
  VecX grad;
  MatX hess;
};

}  // namespace

GeodesicPath chord_path(const TriangleMesh& mesh, const SurfacePoint& a, const SurfacePoint& b,
                        const Mollifier& mol) {
  GeodesicPath p;
  p.start = a;
  p.end = b;
  p.faces = {a.face};
  p.points = {effective_position(mesh, a, mol), effective_position(mesh, b, mol)};
  p.length = (p.points[1] - p.points[0]).norm();
  return p;
}

namespace {

DistanceJet jet_impl(const TriangleMesh& mesh, const GeodesicPath& path, const Mollifier& mol,
                     const JetOptions& opts, bool squared) {
  const WeightMap wa = weight_map(path.start.w, mol);
  const WeightMap wb = weight_map(path.end.w, mol);
  const auto& fa = mesh.face(path.start.face);
  const auto& fb = mesh.face(path.end.face);

  // Host vertex columns.
  std::vector<int> verts;
  auto vcol = [&](int v) -> int {
    auto it = std::find(verts.begin(), verts.end(), v);
    if (it != verts.end()) return 6 + 3 * static_cast<int>(it - verts.begin());
    verts.push_back(v);
    return 6 + 3 * (static_cast<int>(verts.size()) - 1);
  };

  std::vector<Node> nodes;
  {
    Node n;
    n.p = wa.u[0] * mesh.position(fa[0]) + wa.u[1] * mesh.position(fa[1]) + wa.u[2] * mesh.position(fa[2]);
    for (int i = 0; i < 3; ++i) n.J.push_back({i, mesh.position(fa[i])});
    nodes.push_back(std::move(n));
  }
  const double tol = 1e-12 * std::max(path.length, 1e-300);
  std::vector<int> crossing_of;  // crossing index for each t column
  const int m = static_cast<int>(path.crossings.size());
  Vec3 pend = wb.u[0] * mesh.position(fb[0]) + wb.u[1] * mesh.position(fb[1]) + wb.u[2] * mesh.position(fb[2]);
  for (int i = 0; i < m; ++i) {
    const int h = path.crossings[i];
    const double th = path.t[i];
    Vec3 A = mesh.position(mesh.tail(h)), B = mesh.position(mesh.tip(h));
    Vec3 x = A + th * (B - A);
    if ((x - nodes.back().p).norm() <= tol || (x - pend).norm() <= tol) continue;
    Node n;
    n.p = x;
    const double traw = mol.inverse(th);
    const double d1 = mol.d1(traw);
    const int tc = -1 - static_cast<int>(crossing_of.size());  // placeholder, fixed below
    crossing_of.push_back(i);
    n.J.push_back({tc, d1 * (B - A)});
    nodes.push_back(std::move(n));
  }
  {
    Node n;
    n.p = pend;
    for (int i = 0; i < 3; ++i) n.J.push_back({3 + i, mesh.position(fb[i])});
    nodes.push_back(std::move(n));
  }

  // Host columns and mixed second derivatives.
  if (opts.host) {
    Node& s = nodes.front();
    for (int i = 0; i < 3; ++i) {
      int c = vcol(fa[i]);
      for (int d = 0; d < 3; ++d) {
        s.J.push_back({c + d, wa.u[i] * Vec3::Unit(d)});
        s.M.push_back({i, c + d, d, 1.0});
      }
    }
    Node& e = nodes.back();
    for (int i = 0; i < 3; ++i) {
      int c = vcol(fb[i]);
      for (int d = 0; d < 3; ++d) {
        e.J.push_back({c + d, wb.u[i] * Vec3::Unit(d)});
        e.M.push_back({3 + i, c + d, d, 1.0});
      }
    }
    for (size_t k = 1; k + 1 < nodes.size(); ++k) {
      const int i = crossing_of[k - 1];
      const int h = path.crossings[i];
      const double th = path.t[i];
      const double d1 = mol.d1(mol.inverse(th));
      int ca = vcol(mesh.tail(h)), cb = vcol(mesh.tip(h));
      Node& n = nodes[k];
      const int tc = n.J.front().col;
      for (int d = 0; d < 3; ++d) {
        n.J.push_back({ca + d, (1 - th) * Vec3::Unit(d)});
        n.J.push_back({cb + d, th * Vec3::Unit(d)});
        n.M.push_back({tc, ca + d, d, -d1});
        n.M.push_back({tc, cb + d, d, d1});
      }
    }
  }
  const int ntheta = 6 + 3 * static_cast<int>(verts.size());
  const int nt = static_cast<int>(crossing_of.size());
  const int nq = ntheta + nt;
  auto fix = [&](int c) { return c < 0 ? ntheta + (-1 - c) : c; };
  for (auto& n : nodes) {
    for (auto& e : n.J) e.col = fix(e.col);
    for (auto& x : n.M) {
      x.a = fix(x.a);
      x.b = fix(x.b);
    }
  }

  const int nseg = static_cast<int>(nodes.size()) - 1;
  std::vector<double> len(nseg);
  std::vector<Vec3> dir(nseg);
  double value = 0;
  for (int j = 0; j < nseg; ++j) {
    Vec3 d = nodes[j + 1].p - nodes[j].p;
    len[j] = d.norm();
    dir[j] = len[j] > 0 ? Vec3(d / len[j]) : Vec3::Zero();
    value += len[j];
  }
  const bool chord_squared = squared && nseg == 1;

  DistanceJet out;
  out.value = squared ? value * value : value;
  out.verts = verts;
  if (opts.order <= 0) return out;

  if (!chord_squared)
    for (int j = 0; j < nseg; ++j)
      if (!(len[j] > 0)) throw GradientError("zero-length geodesic segment");

  // dL/dP per node, and segment Hessian blocks.
  std::vector<Vec3> G(nodes.size(), Vec3::Zero());
  std::vector<Mat3> H(nseg);
  for (int j = 0; j < nseg; ++j) {
    if (chord_squared) {
      Vec3 d = nodes[j + 1].p - nodes[j].p;
      G[j] -= 2 * d;
      G[j + 1] += 2 * d;
      H[j] = 2 * Mat3::Identity();
    } else {
      G[j] -= dir[j];
      G[j + 1] += dir[j];
      H[j] = (Mat3::Identity() - dir[j] * dir[j].transpose()) / len[j];
    }
  }

  VecX LQ = VecX::Zero(nq);
  for (size_t k = 0; k < nodes.size(); ++k)
    for (const auto& e : nodes[k].J) LQ[e.col] += e.d.dot(G[k]);

  MatX LQQ;
  if (opts.order >= 2) {
    LQQ = MatX::Zero(nq, nq);
    auto block = [&](const Node& a, const Node& b, const Mat3& Hb) {
      for (const auto& ea : a.J) {
        Vec3 Hd = Hb * ea.d;
        for (const auto& eb : b.J) LQQ(ea.col, eb.col) += Hd.dot(eb.d);
      }
    };
    for (int j = 0; j < nseg; ++j) {
      block(nodes[j], nodes[j], H[j]);
      block(nodes[j + 1], nodes[j + 1], H[j]);
      block(nodes[j], nodes[j + 1], -H[j]);
      block(nodes[j + 1], nodes[j], -H[j]);
    }
    for (size_t k = 0; k < nodes.size(); ++k)
      for (const auto& x : nodes[k].M) {
        double v = G[k][x.dim] * x.c;
        LQQ(x.a, x.b) += v;
        LQQ(x.b, x.a) += v;
      }
  }

  // Gradient with t at its stationary value; Hessian via the Schur complement
  // that eliminates the implicit crossing parameters.
  VecX gth = LQ.head(ntheta);
  MatX Hth;
  if (opts.order >= 2) {
    Hth = LQQ.topLeftCorner(ntheta, ntheta);
    out.dt_dw = MatX::Zero(m, 6);
    if (nt > 0) {
      MatX Att = LQQ.bottomRightCorner(nt, nt);
      MatX Bt = LQQ.bottomLeftCorner(nt, ntheta);
      double scale = std::max(Att.diagonal().cwiseAbs().maxCoeff(), 1e-300);
      MatX Ad = Att;
      Ad.diagonal().array() += opts.damping * scale;
      Eigen::LDLT<MatX> ldlt(Ad);
      MatX X = ldlt.solve(Bt);
      for (int it = 0; it < 2; ++it) X += ldlt.solve(Bt - Att * X);
      Hth -= Bt.transpose() * X;
      double rn = Bt.norm();
      out.sensitivity_residual = rn > 0 ? (Att * X - Bt).norm() / rn : 0.0;
      Eigen::Matrix<double, 6, 6> Dw = Eigen::Matrix<double, 6, 6>::Zero();
      Dw.topLeftCorner<3, 3>() = wa.D;
      Dw.bottomRightCorner<3, 3>() = wb.D;
      for (int k = 0; k < nt; ++k) {
        const int i = crossing_of[k];
        const double d1 = mol.d1(mol.inverse(path.t[i]));
        out.dt_dw.row(i) = -d1 * X.row(k).head(6) * Dw;
      }
      Hth = 0.5 * (Hth + Hth.transpose()).eval();
    }
  }

  if (squared && !chord_squared) {
    // phi(g) = g^2
    VecX g1 = gth;
    gth = 2 * value * g1;
    if (opts.order >= 2) Hth = 2 * g1 * g1.transpose() + 2 * value * Hth;
  }

  // Back from normalized weights u to raw weights w.
  Eigen::Matrix<double, 6, 6> Du = Eigen::Matrix<double, 6, 6>::Zero();
  Du.topLeftCorner<3, 3>() = wa.D;
  Du.bottomRightCorner<3, 3>() = wb.D;
  Eigen::Matrix<double, 6, 1> gu = gth.head<6>();
  out.grad = Du.transpose() * gu;
  const int nv3 = ntheta - 6;
  if (opts.host) out.grad_v = gth.tail(nv3);
  if (opts.order >= 2) {
    Eigen::Matrix<double, 6, 6> Huu = Hth.topLeftCorner<6, 6>();
    out.hess = Du.transpose() * Huu * Du;
    for (int i = 0; i < 3; ++i) {
      out.hess.topLeftCorner<3, 3>() += gu[i] * wa.H[i];
      out.hess.bottomRightCorner<3, 3>() += gu[3 + i] * wb.H[i];
    }
    if (opts.host) {
      out.hess_vv = Hth.bottomRightCorner(nv3, nv3);
      out.hess_wv = Du.transpose() * Hth.topRightCorner(6, nv3);
    }
  }
  return out;
}

}  // namespace

DistanceJet distance_jet(const TriangleMesh& mesh, const GeodesicPath& path, const Mollifier& mol,
                         const JetOptions& opts) {
  return jet_impl(mesh, path, mol, opts, false);
}

DistanceJet squared_distance_jet(const TriangleMesh& mesh, const GeodesicPath& path, const Mollifier& mol,
                                 const JetOptions& opts) {
  return jet_impl(mesh, path, mol, opts, true);
}

DistanceJet compose(const DistanceJet& g, double phi, double dphi, double ddphi) {
  DistanceJet out = g;
  out.value = phi;
  out.grad = dphi * g.grad;
  out.hess = dphi * g.hess + ddphi * g.grad * g.grad.transpose();
  out.verts = g.verts;
  if (g.grad_v.size()) {
    out.grad_v = dphi * g.grad_v;
    if (g.hess_vv.size()) {
      out.hess_vv = dphi * g.hess_vv + ddphi * g.grad_v * g.grad_v.transpose();
      out.hess_wv = dphi * g.hess_wv + ddphi * g.grad * g.grad_v.transpose();
    }
  }
  return out;
}

}  // namespace geodiff
