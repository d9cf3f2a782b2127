#include "geodiff/mesh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace geodiff {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::int64_t edge_key(int a, int b, int n) { return static_cast<std::int64_t>(a) * n + b; }

}  // namespace

TriangleMesh TriangleMesh::build(std::vector<Vec3> positions, std::vector<std::array<int, 3>> faces) {
  TriangleMesh m;
  m.positions_ = std::move(positions);
  m.faces_ = std::move(faces);
  if (m.faces_.empty()) throw MeshError("mesh has no faces");
  const int nv = m.num_vertices();
  for (int f = 0; f < m.num_faces(); ++f) {
    const auto& t = m.faces_[f];
    for (int k = 0; k < 3; ++k)
      if (t[k] < 0 || t[k] >= nv)
        throw MeshError("face " + std::to_string(f) + " references missing vertex " + std::to_string(t[k]));
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw MeshError("degenerate triangle " + std::to_string(f) + " (repeated vertex)");
  }
  m.build_connectivity();

  double diag = m.bbox_diagonal();
  for (int f = 0; f < m.num_faces(); ++f)
    if (!(m.face_area(f) > 1e-14 * diag * diag))
      throw MeshError("degenerate triangle " + std::to_string(f) + " (zero area)");
  return m;
}

void TriangleMesh::build_connectivity() {
  const int nv = num_vertices();
  const int nh = num_halfedges();
  twin_.assign(nh, -1);
  edge_of_.assign(nh, -1);
  edge_halfedge_.clear();
  std::unordered_map<std::int64_t, int> directed;
  directed.reserve(nh * 2);
  for (int h = 0; h < nh; ++h) {
    auto key = edge_key(tail(h), tip(h), nv);
    if (!directed.emplace(key, h).second)
      throw MeshError("non-manifold or inconsistently oriented edge (" + std::to_string(tail(h)) + "," +
                      std::to_string(tip(h)) + ")");
  }
  for (int h = 0; h < nh; ++h) {
    auto it = directed.find(edge_key(tip(h), tail(h), nv));
    if (it != directed.end()) twin_[h] = it->second;
  }
  for (int h = 0; h < nh; ++h) {
    if (edge_of_[h] >= 0) continue;
    int e = static_cast<int>(edge_halfedge_.size());
    edge_halfedge_.push_back(h);  // h is in the lower face since we scan in order
    edge_of_[h] = e;
    if (twin_[h] >= 0) edge_of_[twin_[h]] = e;
  }

  vertex_he_.assign(nv, -1);
  boundary_vertex_.assign(nv, 0);
  std::vector<int> valence(nv, 0);
  for (int h = 0; h < nh; ++h) {
    int v = tail(h);
    ++valence[v];
    if (vertex_he_[v] < 0) vertex_he_[v] = h;
    if (twin_[h] < 0) {
      vertex_he_[v] = h;
      boundary_vertex_[v] = 1;
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (vertex_he_[v] < 0) throw MeshError("isolated vertex " + std::to_string(v));
    // A single fan must reach every incident face (rules out bowties).
    auto fan = vertex_outgoing(v);
    if (static_cast<int>(fan.size()) != valence[v])
      throw MeshError("non-manifold vertex " + std::to_string(v));
  }

  // Connectivity over faces.
  std::vector<char> seen(num_faces(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int visited = 1;
  while (!stack.empty()) {
    int f = stack.back();
    stack.pop_back();
    for (int k = 0; k < 3; ++k) {
      int t = twin_[3 * f + k];
      if (t < 0) continue;
      int g = t / 3;
      if (!seen[g]) {
        seen[g] = 1;
        ++visited;
        stack.push_back(g);
      }
    }
  }
  if (visited != num_faces()) throw MeshError("mesh is not connected");
}

std::vector<int> TriangleMesh::vertex_outgoing(int v) const {
  std::vector<int> out;
  int start = vertex_he_[v];
  int h = start;
  do {
    out.push_back(h);
    int t = twin_[prev(h)];
    if (t < 0) break;
    h = t;
    if (out.size() > static_cast<size_t>(num_halfedges())) break;
  } while (h != start);
  return out;
}

std::vector<int> TriangleMesh::vertex_faces(int v) const {
  std::vector<int> out;
  for (int h : vertex_outgoing(v)) out.push_back(he_face(h));
  return out;
}

double TriangleMesh::corner_angle(int h) const {
  Vec3 u = he_vector(h);
  Vec3 w = -he_vector(prev(h));
  return std::atan2(u.cross(w).norm(), u.dot(w));
}

int TriangleMesh::local_index(int f, int v) const {
  for (int k = 0; k < 3; ++k)
    if (faces_[f][k] == v) return k;
  return -1;
}

Vec3 TriangleMesh::face_normal(int f) const {
  const auto& t = faces_[f];
  Vec3 n = (positions_[t[1]] - positions_[t[0]]).cross(positions_[t[2]] - positions_[t[0]]);
  return n.normalized();
}

double TriangleMesh::face_area(int f) const {
  const auto& t = faces_[f];
  return 0.5 * (positions_[t[1]] - positions_[t[0]]).cross(positions_[t[2]] - positions_[t[0]]).norm();
}

double TriangleMesh::total_area() const {
  double a = 0;
  for (int f = 0; f < num_faces(); ++f) a += face_area(f);
  return a;
}

double TriangleMesh::bbox_diagonal() const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& p : positions_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

double TriangleMesh::mean_edge_length() const {
  double s = 0;
  for (int e = 0; e < num_edges(); ++e) s += he_length(edge_halfedge_[e]);
  return s / num_edges();
}

double TriangleMesh::angle_sum(int v) const {
  double s = 0;
  for (int h : vertex_outgoing(v)) s += corner_angle(h);
  return s;
}

double TriangleMesh::angle_defect(int v) const {
  return (boundary_vertex_[v] ? kPi : 2 * kPi) - angle_sum(v);
}

TriangleMesh TriangleMesh::with_positions(std::vector<Vec3> positions) const {
  if (positions.size() != positions_.size()) throw MeshError("position count does not match mesh");
  TriangleMesh m = *this;
  m.positions_ = std::move(positions);
  return m;
}

void TriangleMesh::normalize() {
  double d = bbox_diagonal();
  if (!(d > 0)) throw MeshError("cannot normalize a mesh with zero extent");
  for (auto& p : positions_) p /= d;
}

TriangleMesh parse_obj(std::istream& in, bool normalize) {
  std::vector<Vec3> pos;
  std::vector<std::array<int, 3>> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) throw MeshError("bad vertex at line " + std::to_string(lineno));
      pos.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        int i = 0;
        try {
          i = std::stoi(tok.substr(0, tok.find('/')));
        } catch (const std::exception&) {
          throw MeshError("bad face index at line " + std::to_string(lineno));
        }
        if (i < 0) i = static_cast<int>(pos.size()) + i + 1;
        idx.push_back(i - 1);
      }
      if (idx.size() != 3) throw MeshError("non-triangle face at line " + std::to_string(lineno));
      faces.push_back({idx[0], idx[1], idx[2]});
    }
  }
  TriangleMesh m = TriangleMesh::build(std::move(pos), std::move(faces));
  if (normalize) m.normalize();
  return m;
}

TriangleMesh load_obj(const std::string& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path);
  return parse_obj(in, normalize);
}

void save_obj(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write " + path);
  out.precision(17);
  for (const auto& p : mesh.positions()) out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

const char* to_string(VertexKind k) {
  switch (k) {
    case VertexKind::Spherical: return "spherical";
    case VertexKind::Flat: return "flat";
    case VertexKind::Hyperbolic: return "hyperbolic";
    case VertexKind::Boundary: return "boundary";
  }
  return "?";
}

VertexKind classify_vertex(const TriangleMesh& mesh, int v, double tol) {
  if (mesh.is_boundary_vertex(v)) return VertexKind::Boundary;
  double d = mesh.angle_defect(v);
  if (d > tol) return VertexKind::Spherical;
  if (d < -tol) return VertexKind::Hyperbolic;
  return VertexKind::Flat;
}

Vec3 embed(const TriangleMesh& mesh, const SurfacePoint& p) {
  const auto& t = mesh.face(p.face);
  return p.w[0] * mesh.position(t[0]) + p.w[1] * mesh.position(t[1]) + p.w[2] * mesh.position(t[2]);
}

SurfacePoint vertex_point(const TriangleMesh& mesh, int v) {
  int h = mesh.vertex_halfedge(v);
  int best = TriangleMesh::he_face(h);
  for (int f : mesh.vertex_faces(v)) best = std::min(best, f);
  SurfacePoint p;
  p.face = best;
  p.w = Vec3::Zero();
  p.w[mesh.local_index(best, v)] = 1.0;
  return p;
}

SurfacePoint canonicalize(const TriangleMesh& mesh, SurfacePoint p, double tol) {
  for (int i = 0; i < 3; ++i)
    if (p.w[i] < tol) p.w[i] = 0.0;
  double s = p.w.sum();
  if (!(s > 0)) throw MeshError("invalid barycentric weights");
  p.w /= s;
  int zeros = 0, nonzero = -1, zero = -1;
  for (int i = 0; i < 3; ++i) {
    if (p.w[i] == 0.0) {
      ++zeros;
      zero = i;
    } else {
      nonzero = i;
    }
  }
  if (zeros == 2) return vertex_point(mesh, mesh.face(p.face)[nonzero]);
  if (zeros == 1) {
    int h = 3 * p.face + (zero + 1) % 3;
    int t = mesh.twin(h);
    if (t >= 0 && TriangleMesh::he_face(t) < p.face) {
      SurfacePoint q;
      if (express_in_face(mesh, p, TriangleMesh::he_face(t), q)) return q;
    }
  }
  return p;
}

bool express_in_face(const TriangleMesh& mesh, const SurfacePoint& p, int face, SurfacePoint& out,
                     double tol) {
  if (face == p.face) {
    out = p;
    return true;
  }
  const auto& src = mesh.face(p.face);
  SurfacePoint q;
  q.face = face;
  q.w = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(p.w[i]) <= tol) continue;
    int k = mesh.local_index(face, src[i]);
    if (k < 0) return false;
    q.w[k] = p.w[i];
  }
  q.w /= q.w.sum();
  out = q;
  return true;
}

SurfacePoint locate_direction(const TriangleMesh& mesh, const Vec3& dir) {
  double best_t = -1;
  SurfacePoint best;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.face(f);
    Vec3 a = mesh.position(t[0]), b = mesh.position(t[1]), c = mesh.position(t[2]);
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pv = dir.cross(e2);
    double det = e1.dot(pv);
    if (std::abs(det) < 1e-300) continue;
    Vec3 tv = -a;
    double u = tv.dot(pv) / det;
    Vec3 qv = tv.cross(e1);
    double v = dir.dot(qv) / det;
    double s = e2.dot(qv) / det;
    const double eps = 1e-12;
    if (u < -eps || v < -eps || u + v > 1 + eps || s <= 0) continue;
    if (s > best_t) {
      best_t = s;
      best.face = f;
      best.w = Vec3(1 - u - v, u, v).cwiseMax(0.0);
      best.w /= best.w.sum();
    }
  }
  if (best_t < 0) throw MeshError("direction does not hit the surface");
  return best;
}

namespace {

// Closest point on triangle abc to p, returned as barycentric weights.
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return {1, 0, 0};
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return {0, 1, 0};
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    double v = d1 / (d1 - d3);
    return {1 - v, v, 0};
  }
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return {0, 0, 1};
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    double w = d2 / (d2 - d6);
    return {1 - w, 0, w};
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {0, 1 - w, w};
  }
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return {1 - v - w, v, w};
}

}  // namespace

SurfacePoint closest_point(const TriangleMesh& mesh, const Vec3& q) {
  double best = std::numeric_limits<double>::infinity();
  SurfacePoint out;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.face(f);
    Vec3 w = closest_on_triangle(q, mesh.position(t[0]), mesh.position(t[1]), mesh.position(t[2]));
    SurfacePoint p{f, w};
    double d = (embed(mesh, p) - q).squaredNorm();
    if (d < best) {
      best = d;
      out = p;
    }
  }
  return out;
}

Eigen::Matrix<double, 3, 2> tangent_basis() {
  Eigen::Matrix<double, 3, 2> B;
  B << -1, -1, 1, 0, 0, 1;
  return B;
}

Eigen::Matrix<double, 3, 2> tangent_frame(const TriangleMesh& mesh, int f) {
  const auto& t = mesh.face(f);
  Mat3 P;
  P.col(0) = mesh.position(t[0]);
  P.col(1) = mesh.position(t[1]);
  P.col(2) = mesh.position(t[2]);
  return P * tangent_basis();
}

Vec2 to_local(const TriangleMesh& mesh, int f, const Vec3& d) {
  Eigen::Matrix<double, 3, 2> T = tangent_frame(mesh, f);
  return (T.transpose() * T).ldlt().solve(T.transpose() * d);
}

}  // namespace geodiff
