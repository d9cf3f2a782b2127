#include "geodiff/trace.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace geodiff {

namespace {

Vec3 clamp_weights(Vec3 w) {
  w = w.cwiseMax(0.0);
  return w / w.sum();
}

// Barycentric rates of change per unit 3D displacement along dir.
Vec3 barycentric_rate(const TriangleMesh& mesh, int f, const Vec3& dir) {
  const auto& t = mesh.face(f);
  const Vec3& p0 = mesh.position(t[0]);
  const Vec3& p1 = mesh.position(t[1]);
  const Vec3& p2 = mesh.position(t[2]);
  Vec3 n = (p1 - p0).cross(p2 - p0);
  double a2 = n.norm();
  Vec3 nh = n / a2;
  Vec3 d;
  d[0] = nh.cross(p2 - p1).dot(dir) / a2;
  d[1] = nh.cross(p0 - p2).dot(dir) / a2;
  d[2] = nh.cross(p1 - p0).dot(dir) / a2;
  d.array() -= d.mean();
  return d;
}

Mat3 frame_of(const Vec3& dir, const Vec3& n) {
  Mat3 F;
  F.col(0) = dir;
  F.col(1) = n.cross(dir);
  F.col(2) = n;
  return F;
}

}  // namespace

TraceResult trace(const TriangleMesh& mesh, const SurfacePoint& p, const Vec3& dw, const TraceOptions& opts) {
  TraceResult res;
  SurfacePoint cur{p.face, clamp_weights(p.w)};
  const auto& t0 = mesh.face(cur.face);
  Vec3 d3 = dw[0] * mesh.position(t0[0]) + dw[1] * mesh.position(t0[1]) + dw[2] * mesh.position(t0[2]);
  double len = d3.norm();
  res.end = cur;
  if (!(len > 0)) return res;
  if (!std::isfinite(len) || len > opts.max_length_factor * mesh.bbox_diagonal())
    throw TraceError("trace step of length " + std::to_string(len) + " is out of range");

  Vec3 dir = d3 / len;
  double remaining = len;
  Mat3 R = Mat3::Identity();
  bool at_start = true;

  for (int iter = 0;; ++iter) {
    if (iter > opts.max_faces) throw TraceError("trace did not terminate");
    const int f = cur.face;
    Vec3 rate = barycentric_rate(mesh, f, dir);
    const double scale = rate.cwiseAbs().maxCoeff();
    double s_exit = std::numeric_limits<double>::infinity();
    int exit_i = -1;
    for (int i = 0; i < 3; ++i) {
      if (rate[i] < -1e-13 * scale) {
        double s = cur.w[i] / -rate[i];
        if (s < s_exit) {
          s_exit = s;
          exit_i = i;
        }
      }
    }
    if (s_exit >= remaining) {
      cur.w = clamp_weights(cur.w + remaining * rate);
      res.length += remaining;
      break;
    }
    Vec3 we = cur.w + s_exit * rate;
    we[exit_i] = 0.0;
    we = clamp_weights(we);
    remaining -= s_exit;
    res.length += s_exit;
    if (s_exit > 0) at_start = false;

    int corner = -1;
    for (int j = 0; j < 3; ++j)
      if (j != exit_i && we[j] <= 1e-12) corner = 3 - exit_i - j;

    if (corner >= 0) {
      const int v = mesh.face(f)[corner];
      cur.w = Vec3::Zero();
      cur.w[corner] = 1.0;
      if (mesh.is_boundary_vertex(v)) {
        res.hit_boundary = true;
        break;
      }
      const int h = 3 * f + corner;
      Vec3 e1 = mesh.he_vector(h).normalized();
      double tau;
      if (!at_start) {
        // Arrived through the vertex: leave it so both sides see half the total angle.
        tau = std::atan2(e1.cross(-dir).norm(), e1.dot(-dir)) + 0.5 * mesh.angle_sum(v);
      } else {
        // Started on the vertex: find the wedge that contains the direction.
        tau = std::atan2(mesh.face_normal(f).dot(e1.cross(dir)), e1.dot(dir));
      }
      int hv = h;
      double alpha = mesh.corner_angle(hv);
      for (int guard = 0; guard < 1000 && (tau > alpha || tau < 0); ++guard) {
        if (tau > alpha) {
          tau -= alpha;
          hv = mesh.twin(TriangleMesh::prev(hv));
        } else {
          hv = TriangleMesh::next(mesh.twin(hv));
          tau += mesh.corner_angle(hv);
        }
        alpha = mesh.corner_angle(hv);
      }
      const int g = TriangleMesh::he_face(hv);
      Vec3 ng = mesh.face_normal(g);
      Vec3 u1 = mesh.he_vector(hv).normalized();
      Vec3 newdir = std::cos(tau) * u1 + std::sin(tau) * ng.cross(u1);
      newdir.normalize();
      Mat3 step = frame_of(newdir, ng) * frame_of(dir, mesh.face_normal(f)).transpose();
      R = step * R;
      dir = newdir;
      cur.face = g;
      cur.w = Vec3::Zero();
      cur.w[mesh.local_index(g, v)] = 1.0;
      if (g != f) ++res.faces_crossed;
      at_start = false;
      continue;
    }

    const int h = 3 * f + (exit_i + 1) % 3;
    const int tw = mesh.twin(h);
    if (tw < 0) {
      cur.w = we;
      res.hit_boundary = true;
      break;
    }
    const int g = TriangleMesh::he_face(tw);
    const int a = mesh.tail(h), b = mesh.tip(h);
    Vec3 wg = Vec3::Zero();
    wg[mesh.local_index(g, a)] = we[(exit_i + 1) % 3];
    wg[mesh.local_index(g, b)] = we[(exit_i + 2) % 3];

    Vec3 e = mesh.he_vector(h).normalized();
    Vec3 nf = mesh.face_normal(f), ng = mesh.face_normal(g);
    Mat3 step = e * e.transpose() + ng.cross(e) * nf.cross(e).transpose() + ng * nf.transpose();
    R = step * R;
    dir = step * dir;
    dir -= dir.dot(ng) * ng;
    dir.normalize();
    cur = {g, clamp_weights(wg)};
    ++res.faces_crossed;
    at_start = false;
  }
  res.end = cur;
  res.transport = R;
  return res;
}

TraceResult trace_local(const TriangleMesh& mesh, const SurfacePoint& p, const Vec2& step,
                        const TraceOptions& opts) {
  return trace(mesh, p, tangent_basis() * step, opts);
}

Mat2 transport_jacobian(const TriangleMesh& mesh, int from_face, int to_face, const Mat3& rotation) {
  Eigen::Matrix<double, 3, 2> Tf = tangent_frame(mesh, from_face);
  Eigen::Matrix<double, 3, 2> Tt = tangent_frame(mesh, to_face);
  Mat2 G = Tt.transpose() * Tt;
  return G.ldlt().solve(Tt.transpose() * rotation * Tf);
}

}  // namespace geodiff
