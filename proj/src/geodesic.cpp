#include "geodiff/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <set>

namespace geodiff {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

double cross2(const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); }

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

using Queue = std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                                  std::greater<std::pair<double, int>>>;

}  // namespace

Vec3 effective_weights(const Vec3& w, const Mollifier& m) {
  if (!m.enabled) return w / w.sum();
  Vec3 u(m.value(w[0]), m.value(w[1]), m.value(w[2]));
  return u / u.sum();
}

Vec3 effective_position(const TriangleMesh& mesh, const SurfacePoint& p, const Mollifier& m) {
  return embed(mesh, SurfacePoint{p.face, effective_weights(p.w, m)});
}

// ---------------------------------------------------------------------------
// Steiner graph

SteinerGraph::SteinerGraph(const TriangleMesh& mesh, int k) : k_(std::max(k, 0)), nv_(mesh.num_vertices()) {
  const int ne = mesh.num_edges();
  pos_.reserve(nv_ + ne * k_);
  for (int v = 0; v < nv_; ++v) pos_.push_back(mesh.position(v));
  node_faces_.resize(nv_ + ne * k_);
  for (int v = 0; v < nv_; ++v) node_faces_[v] = mesh.vertex_faces(v);
  for (int e = 0; e < ne; ++e) {
    int h = mesh.edge_halfedge(e);
    Vec3 a = mesh.position(mesh.tail(h)), b = mesh.position(mesh.tip(h));
    std::vector<int> faces{TriangleMesh::he_face(h)};
    if (mesh.twin(h) >= 0) faces.push_back(TriangleMesh::he_face(mesh.twin(h)));
    for (int j = 0; j < k_; ++j) {
      pos_.push_back(a + (double(j + 1) / (k_ + 1)) * (b - a));
      node_faces_[nv_ + e * k_ + j] = faces;
    }
  }
  face_nodes_.resize(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    auto& list = face_nodes_[f];
    for (int i = 0; i < 3; ++i) list.push_back(mesh.face(f)[i]);
    for (int i = 0; i < 3; ++i) {
      int e = mesh.edge_of(3 * f + i);
      for (int j = 0; j < k_; ++j) list.push_back(nv_ + e * k_ + j);
    }
  }
}

SteinerGraph::Route SteinerGraph::shortest(const TriangleMesh& mesh, const SurfacePoint& a,
                                           const SurfacePoint& b) const {
  const int n = num_nodes();
  const Vec3 pa = embed(mesh, a), pb = embed(mesh, b);
  std::vector<double> dist(n, kInf);
  std::vector<int> prev(n, -1), pface(n, -1);
  Queue pq;
  for (int m : face_nodes_[a.face]) {
    double d = (pos_[m] - pa).norm();
    if (d < dist[m]) {
      dist[m] = d;
      prev[m] = -2;
      pface[m] = a.face;
      pq.emplace(d, m);
    }
  }
  const auto& targets = face_nodes_[b.face];
  double best = kInf;
  int best_node = -1;
  if (a.face == b.face) {
    best = (pa - pb).norm();
    best_node = -2;
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (d >= best) break;
    if (std::find(targets.begin(), targets.end(), u) != targets.end()) {
      double c = d + (pos_[u] - pb).norm();
      if (c < best) {
        best = c;
        best_node = u;
      }
    }
    for (int f : node_faces_[u])
      for (int m : face_nodes_[f]) {
        double nd = d + (pos_[u] - pos_[m]).norm();
        if (nd < dist[m]) {
          dist[m] = nd;
          prev[m] = u;
          pface[m] = f;
          pq.emplace(nd, m);
        }
      }
  }
  Route r;
  r.distance = best;
  if (best_node == -1) throw GeodesicError("endpoints are not connected");
  std::vector<int> nodes;
  for (int u = best_node; u >= 0; u = prev[u]) nodes.push_back(u);
  std::reverse(nodes.begin(), nodes.end());
  for (size_t i = 0; i < nodes.size(); ++i) r.hops.push_back({nodes[i], pface[nodes[i]]});
  r.hops.push_back({-1, b.face});
  return r;
}

SteinerGraph::Tree SteinerGraph::tree(const TriangleMesh& mesh, const SurfacePoint& a, double radius) const {
  const int n = num_nodes();
  const Vec3 pa = embed(mesh, a);
  Tree t;
  t.dist.assign(n, kInf);
  t.prev.assign(n, -1);
  t.face.assign(n, -1);
  Queue pq;
  for (int m : face_nodes_[a.face]) {
    double d = (pos_[m] - pa).norm();
    if (d < t.dist[m]) {
      t.dist[m] = d;
      t.prev[m] = -2;
      t.face[m] = a.face;
      pq.emplace(d, m);
    }
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > t.dist[u]) continue;
    if (d > radius) break;
    for (int f : node_faces_[u])
      for (int m : face_nodes_[f]) {
        double nd = d + (pos_[u] - pos_[m]).norm();
        if (nd < t.dist[m]) {
          t.dist[m] = nd;
          t.prev[m] = u;
          t.face[m] = f;
          pq.emplace(nd, m);
        }
      }
  }
  return t;
}

std::vector<SteinerGraph::Hop> SteinerGraph::hops_to(const Tree& t, int n) {
  std::vector<Hop> hops;
  for (int u = n; u >= 0; u = t.prev[u]) hops.push_back({u, t.face[u]});
  std::reverse(hops.begin(), hops.end());
  return hops;
}

double SteinerGraph::distance(const TriangleMesh& mesh, const SurfacePoint& a, const SurfacePoint& b) const {
  return shortest(mesh, a, b).distance;
}

void SteinerGraph::multi_source(const TriangleMesh& mesh, const std::vector<SurfacePoint>& sources,
                                std::vector<int>& label, std::vector<double>& out) const {
  const int n = num_nodes();
  std::vector<double> dist(n, kInf);
  std::vector<int> lab(n, -1);
  Queue pq;
  for (size_t s = 0; s < sources.size(); ++s) {
    Vec3 p = embed(mesh, sources[s]);
    for (int m : face_nodes_[sources[s].face]) {
      double d = (pos_[m] - p).norm();
      if (d < dist[m]) {
        dist[m] = d;
        lab[m] = static_cast<int>(s);
        pq.emplace(d, m);
      }
    }
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (int f : node_faces_[u])
      for (int m : face_nodes_[f]) {
        double nd = d + (pos_[u] - pos_[m]).norm();
        if (nd < dist[m]) {
          dist[m] = nd;
          lab[m] = lab[u];
          pq.emplace(nd, m);
        }
      }
  }
  label.assign(lab.begin(), lab.begin() + nv_);
  out.assign(dist.begin(), dist.begin() + nv_);
}

double oracle_distance(const TriangleMesh& mesh, const SurfacePoint& a, const SurfacePoint& b, int k) {
  return SteinerGraph(mesh, k).distance(mesh, a, b);
}

// ---------------------------------------------------------------------------
// Engine

GeodesicEngine::GeodesicEngine(TriangleMesh mesh, GeodesicOptions opts)
    : mesh_(std::move(mesh)), opts_(opts), graph_(mesh_, opts.steiner_points) {}

namespace {

struct Walk {
  std::vector<int> crossings;
  std::vector<int> faces;
  double angle = 0.0;
  bool ok = false;
};

// Rotate around v from face F until face G, ccw or cw.
Walk walk_around(const TriangleMesh& mesh, int v, int F, int G, bool ccw) {
  Walk w;
  int h = 3 * F + mesh.local_index(F, v);
  const int limit = 4 * static_cast<int>(mesh.vertex_faces(v).size()) + 4;
  for (int step = 0; step < limit; ++step) {
    int cross = ccw ? TriangleMesh::prev(h) : h;
    int t = mesh.twin(cross);
    if (t < 0) return w;
    int g = TriangleMesh::he_face(t);
    w.crossings.push_back(cross);
    w.faces.push_back(g);
    if (g == G) {
      w.ok = true;
      return w;
    }
    h = ccw ? t : TriangleMesh::next(t);
    w.angle += mesh.corner_angle(h);
  }
  return w;
}

struct Strip {
  std::vector<int> faces;
  std::vector<int> crossings;
};

void remove_backtracks(Strip& s) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t j = 0; j + 2 < s.faces.size(); ++j) {
      if (s.faces[j] == s.faces[j + 2]) {
        s.faces.erase(s.faces.begin() + j + 1, s.faces.begin() + j + 3);
        s.crossings.erase(s.crossings.begin() + j, s.crossings.begin() + j + 2);
        changed = true;
        break;
      }
    }
  }
}

// Portals pf..pl (1-based) all touch v. Replace the fan of faces on the strip
// side of v with the fan on the far side.
bool swap_fan(const TriangleMesh& mesh, const Strip& s, int pf, int pl, int v, Strip& out) {
  const bool strip_ccw = mesh.tip(s.crossings[pf - 1]) == v;
  Walk w = walk_around(mesh, v, s.faces[pf - 1], s.faces[pl], !strip_ccw);
  if (!w.ok) return false;
  out.faces.assign(s.faces.begin(), s.faces.begin() + pf);
  out.faces.insert(out.faces.end(), w.faces.begin(), w.faces.end());
  out.faces.insert(out.faces.end(), s.faces.begin() + pl + 1, s.faces.end());
  out.crossings.assign(s.crossings.begin(), s.crossings.begin() + (pf - 1));
  out.crossings.insert(out.crossings.end(), w.crossings.begin(), w.crossings.end());
  out.crossings.insert(out.crossings.end(), s.crossings.begin() + pl, s.crossings.end());
  remove_backtracks(out);
  return true;
}

struct Corner {
  int portal;
  bool left;
};

struct Unfolded {
  std::vector<std::array<Vec2, 3>> coords;
  std::vector<Vec2> left, right;  // portal endpoints, index 0 and m+1 are the endpoints
  std::vector<int> lv, rv;
};

Unfolded unfold(const TriangleMesh& mesh, const Strip& s, const Vec3& ua, const Vec3& ub) {
  const int m = static_cast<int>(s.crossings.size());
  Unfolded u;
  u.coords.resize(s.faces.size());
  {
    const auto& t = s.faces.empty() ? mesh.face(0) : mesh.face(s.faces[0]);
    Vec3 p0 = mesh.position(t[0]), p1 = mesh.position(t[1]), p2 = mesh.position(t[2]);
    double d = (p1 - p0).norm(), la = (p2 - p0).norm(), lb = (p2 - p1).norm();
    double x = (la * la - lb * lb + d * d) / (2 * d);
    u.coords[0] = {Vec2(0, 0), Vec2(d, 0), Vec2(x, std::sqrt(std::max(la * la - x * x, 0.0)))};
  }
  for (int j = 0; j < m; ++j) {
    const int h = s.crossings[j];
    const int f = s.faces[j], g = s.faces[j + 1];
    const int a = mesh.tail(h), b = mesh.tip(h);
    Vec2 A = u.coords[j][mesh.local_index(f, a)];
    Vec2 B = u.coords[j][mesh.local_index(f, b)];
    int c = -1;
    for (int k = 0; k < 3; ++k)
      if (mesh.face(g)[k] != a && mesh.face(g)[k] != b) c = mesh.face(g)[k];
    double d = (mesh.position(b) - mesh.position(a)).norm();
    double la = (mesh.position(c) - mesh.position(a)).norm();
    double lb = (mesh.position(c) - mesh.position(b)).norm();
    double x = (la * la - lb * lb + d * d) / (2 * d);
    double y = -std::sqrt(std::max(la * la - x * x, 0.0));
    Vec2 ex = (B - A) / (B - A).norm();
    Vec2 ey(-ex.y(), ex.x());
    Vec2 C = A + x * ex + y * ey;
    auto& cg = u.coords[j + 1];
    cg[mesh.local_index(g, a)] = A;
    cg[mesh.local_index(g, b)] = B;
    cg[mesh.local_index(g, c)] = C;
  }
  const auto& c0 = u.coords.front();
  const auto& c1 = u.coords.back();
  Vec2 s2 = ua[0] * c0[0] + ua[1] * c0[1] + ua[2] * c0[2];
  Vec2 e2 = ub[0] * c1[0] + ub[1] * c1[1] + ub[2] * c1[2];
  u.left.resize(m + 2);
  u.right.resize(m + 2);
  u.lv.assign(m + 2, -1);
  u.rv.assign(m + 2, -1);
  u.left[0] = u.right[0] = s2;
  u.left[m + 1] = u.right[m + 1] = e2;
  for (int p = 1; p <= m; ++p) {
    const int h = s.crossings[p - 1];
    const int f = s.faces[p - 1];
    u.lv[p] = mesh.tip(h);
    u.rv[p] = mesh.tail(h);
    u.left[p] = u.coords[p - 1][mesh.local_index(f, u.lv[p])];
    u.right[p] = u.coords[p - 1][mesh.local_index(f, u.rv[p])];
  }
  return u;
}

std::vector<Corner> funnel(const Unfolded& u) {
  std::vector<Corner> corners;
  const int n = static_cast<int>(u.left.size());
  Vec2 apex = u.left[0], left = apex, right = apex;
  int ai = 0, li = 0, ri = 0;
  for (int i = 1; i < n; ++i) {
    const Vec2& L = u.left[i];
    const Vec2& R = u.right[i];
    // An apex sitting on the portal (an end point on a strip edge) passes
    // through it; the half-plane funnel it would open confuses the side tests.
    if (apex != L && apex != R && std::abs(cross2(L - apex, R - apex)) <= 1e-12 * (L - R).squaredNorm() &&
        (L - apex).dot(R - apex) <= 0)
      continue;
    if (cross2(right - apex, R - apex) >= 0) {
      if (apex == right || apex == left || cross2(left - apex, R - apex) < 0) {
        right = R;
        ri = i;
      } else {
        corners.push_back({li, true});
        apex = left;
        ai = li;
        left = right = apex;
        li = ri = ai;
        i = ai;
        continue;
      }
    }
    if (cross2(left - apex, L - apex) <= 0) {
      if (apex == left || apex == right || cross2(right - apex, L - apex) > 0) {
        left = L;
        li = i;
      } else {
        corners.push_back({ri, false});
        apex = right;
        ai = ri;
        left = right = apex;
        li = ri = ai;
        i = ai;
        continue;
      }
    }
  }
  // the last portal is the end point itself, which can show up as a corner
  std::erase_if(corners, [&](const Corner& c) { return c.portal <= 0 || c.portal >= n - 1; });
  return corners;
}

}  // namespace

void GeodesicEngine::seed_strip(const SurfacePoint& a, const SurfacePoint& b, std::vector<int>& faces,
                                std::vector<int>& crossings) const {
  faces.assign(1, a.face);
  crossings.clear();
  if (a.face == b.face) return;
  strip_from_hops(a, b, graph_.shortest(mesh_, a, b).hops, faces, crossings);
}

void GeodesicEngine::strip_from_hops(const SurfacePoint& a, const SurfacePoint& b,
                                     const std::vector<SteinerGraph::Hop>& hops, std::vector<int>& faces,
                                     std::vector<int>& crossings) const {
  faces.assign(1, a.face);
  crossings.clear();
  std::vector<int> where(mesh_.num_faces(), -1);
  where[a.face] = 0;
  auto append = [&](int g, int h) {
    if (where[g] >= 0) {
      int p = where[g];
      for (size_t j = p + 1; j < faces.size(); ++j) where[faces[j]] = -1;
      faces.resize(p + 1);
      crossings.resize(p);
      return;
    }
    where[g] = static_cast<int>(faces.size());
    faces.push_back(g);
    crossings.push_back(h);
  };
  for (size_t i = 0; i + 1 < hops.size(); ++i) {
    const int node = hops[i].node;
    const int G = hops[i + 1].face;
    const int F = faces.back();
    if (G == F) continue;
    if (graph_.is_vertex(node)) {
      Walk ccw = walk_around(mesh_, node, F, G, true);
      Walk cw = walk_around(mesh_, node, F, G, false);
      const Walk* w = nullptr;
      if (ccw.ok && (!cw.ok || ccw.angle <= cw.angle)) w = &ccw;
      if (cw.ok && !w) w = &cw;
      if (!w) throw GeodesicError("cannot rotate around vertex " + std::to_string(node));
      for (size_t j = 0; j < w->faces.size(); ++j) append(w->faces[j], w->crossings[j]);
    } else {
      int h = mesh_.edge_halfedge(graph_.node_edge(node));
      if (TriangleMesh::he_face(h) != F) h = mesh_.twin(h);
      if (h < 0 || TriangleMesh::he_face(h) != F || mesh_.twin(h) < 0 ||
          TriangleMesh::he_face(mesh_.twin(h)) != G)
        throw GeodesicError("inconsistent seed route");
      append(G, h);
    }
  }
  if (faces.back() != b.face) throw GeodesicError("seed strip does not reach the end face");
}

GeodesicPath GeodesicEngine::straighten(const SurfacePoint& a, const SurfacePoint& b, std::vector<int> faces,
                                        std::vector<int> crossings) const {
  const TriangleMesh& mesh = mesh_;
  const Mollifier& mol = opts_.mollifier;
  if (faces.empty() || faces.front() != a.face || faces.back() != b.face ||
      crossings.size() + 1 != faces.size())
    throw GeodesicError("strip does not connect the endpoints");
  Strip s{std::move(faces), std::move(crossings)};
  const Vec3 ua = effective_weights(a.w, mol), ub = effective_weights(b.w, mol);

  GeodesicPath path;
  path.start = a;
  path.end = b;
  std::set<std::vector<int>> seen;

  for (;;) {
    const int m = static_cast<int>(s.crossings.size());
    Unfolded u = unfold(mesh, s, ua, ub);
    std::vector<Corner> corners = funnel(u);

    // Crossing parameters from the straight pieces between corners.
    std::vector<double> t(m, 0.0);
    std::vector<char> snapped(m + 2, 0);
    std::vector<int> stops{0};
    std::vector<Vec2> stop_pos{u.left[0]};
    std::vector<int> stop_vertex{-1};
    for (const auto& c : corners) {
      stops.push_back(c.portal);
      stop_pos.push_back(c.left ? u.left[c.portal] : u.right[c.portal]);
      stop_vertex.push_back(c.left ? u.lv[c.portal] : u.rv[c.portal]);
    }
    stops.push_back(m + 1);
    stop_pos.push_back(u.left[m + 1]);
    stop_vertex.push_back(-1);
    size_t seg = 0;
    for (int p = 1; p <= m; ++p) {
      while (seg + 1 < stops.size() && stops[seg + 1] < p) ++seg;
      // Portal touches a corner vertex of this piece: the path passes through it.
      int touch = -1;
      for (size_t q : {seg, seg + 1}) {
        if (q >= stops.size()) continue;
        int v = stop_vertex[q];
        if (v >= 0 && (v == u.lv[p] || v == u.rv[p])) touch = v;
      }
      if (touch >= 0) {
        t[p - 1] = (touch == u.lv[p]) ? 1.0 : 0.0;
        snapped[p] = 1;
        continue;
      }
      const Vec2& P = stop_pos[seg];
      const Vec2& Q = stop_pos[std::min(seg + 1, stops.size() - 1)];
      const Vec2& A = u.right[p];
      const Vec2& B = u.left[p];
      double den = cross2(B - A, Q - P);
      double tt = std::abs(den) > 0 ? cross2(P - A, Q - P) / den : 0.5;
      t[p - 1] = std::clamp(tt, 0.0, 1.0);
    }

    std::vector<Vec3> pts(m + 2);
    pts[0] = embed(mesh, SurfacePoint{a.face, ua});
    pts[m + 1] = embed(mesh, SurfacePoint{b.face, ub});
    for (int p = 1; p <= m; ++p) {
      const int h = s.crossings[p - 1];
      pts[p] = mesh.position(mesh.tail(h)) + t[p - 1] * mesh.he_vector(h);
    }

    // Look for a corner whose far side is shorter than a straight angle.
    int pivot_first = -1, pivot_last = -1, pivot_vertex = -1;
    for (size_t ci = 0; ci < corners.size() && pivot_vertex < 0; ++ci) {
      const Corner& c = corners[ci];
      const int v = c.left ? u.lv[c.portal] : u.rv[c.portal];
      if (mesh.is_boundary_vertex(v)) continue;
      auto contains = [&](int p) { return p >= 1 && p <= m && (u.lv[p] == v || u.rv[p] == v); };
      int pf = c.portal, pl = c.portal;
      while (contains(pf - 1)) --pf;
      while (contains(pl + 1)) ++pl;
      const Vec3 pv = mesh.position(v);
      Vec3 din = pts[pf - 1] - pv, dout = pts[pl + 1] - pv;
      if (din.norm() < 1e-14 || dout.norm() < 1e-14) continue;
      auto other = [&](int p) -> Vec3 {
        const int h = s.crossings[p - 1];
        return mesh.position(mesh.tail(h) == v ? mesh.tip(h) : mesh.tail(h)) - pv;
      };
      double theta = angle_between(din, other(pf)) + angle_between(other(pl), dout);
      for (int q = pf; q < pl; ++q) theta += mesh.corner_angle(3 * s.faces[q] + mesh.local_index(s.faces[q], v));
      double far = mesh.angle_sum(v) - theta;
      if (far < kPi - 1e-10) {
        pivot_first = pf;
        pivot_last = pl;
        pivot_vertex = v;
      }
    }

    if (pivot_vertex < 0) {
      path.faces = s.faces;
      path.crossings = s.crossings;
      path.t = t;
      path.points = pts;
      path.length = 0;
      for (int j = 0; j <= m; ++j) path.length += (pts[j + 1] - pts[j]).norm();
      double stat = 0;
      for (int p = 1; p <= m; ++p) {
        if (snapped[p] || t[p - 1] <= 0 || t[p - 1] >= 1) continue;
        Vec3 d0 = pts[p] - pts[p - 1], d1 = pts[p + 1] - pts[p];
        if (d0.norm() < 1e-14 || d1.norm() < 1e-14) continue;
        double g = (d0.normalized() - d1.normalized()).dot(mesh.he_vector(s.crossings[p - 1]));
        stat = std::max(stat, std::abs(g));
      }
      path.stationarity = stat;
      return path;
    }

    Strip n;
    if (!swap_fan(mesh, s, pivot_first, pivot_last, pivot_vertex, n))
      throw GeodesicError("pivot walk failed at vertex " + std::to_string(pivot_vertex));
    s = std::move(n);
    ++path.pivots;
    if (path.pivots > opts_.max_pivots) throw GeodesicError("pivot limit exceeded");
    if (!seen.insert(s.faces).second) throw GeodesicError("pivot cycle detected");
  }
}

namespace {

// Halfedge of p's face whose edge p lies on, -1 for interior points and
// vertices.
int edge_under(const TriangleMesh& mesh, const SurfacePoint& p) {
  int k = -1;
  for (int i = 0; i < 3; ++i)
    if (p.w[i] <= 1e-14) {
      if (k >= 0) return -1;
      k = i;
    }
  if (k < 0) return -1;
  const int h = 3 * p.face + (k + 1) % 3;
  return mesh.twin(h) >= 0 ? h : -1;
}

SurfacePoint across(const TriangleMesh& mesh, const SurfacePoint& p, int h) {
  const int g = mesh.twin(h);
  SurfacePoint q{TriangleMesh::he_face(g)};
  q.w = Vec3::Zero();
  q.w[g % 3] = p.w[(h % 3 + 1) % 3];
  q.w[(g % 3 + 1) % 3] = p.w[h % 3];
  return q;
}

}  // namespace

GeodesicPath GeodesicEngine::shortest(const SurfacePoint& a, const SurfacePoint& b) const {
  if (a.face < 0 || a.face >= mesh_.num_faces() || b.face < 0 || b.face >= mesh_.num_faces())
    throw GeodesicError("endpoint face out of range");
  GeodesicPath best = shortest_from_faces(a, b);
  // An end point on an edge belongs to two faces, and the search from either
  // can settle on a different local geodesic. Keep the shorter, expressed in
  // the caller's faces.
  const int ha = edge_under(mesh_, a), hb = edge_under(mesh_, b);
  auto consider = [&](std::vector<int> faces, std::vector<int> crossings) {
    try {
      GeodesicPath alt = straighten(a, b, std::move(faces), std::move(crossings));
      if (alt.length < best.length - 1e-12) best = std::move(alt);
    } catch (const GeodesicError&) {
    }
  };
  if (ha >= 0) {
    GeodesicPath p = shortest_from_faces(across(mesh_, a, ha), b);
    if (p.faces.size() > 1 && p.faces[1] == a.face)
      consider({p.faces.begin() + 1, p.faces.end()}, {p.crossings.begin() + 1, p.crossings.end()});
    else {
      p.faces.insert(p.faces.begin(), a.face);
      p.crossings.insert(p.crossings.begin(), ha);
      consider(std::move(p.faces), std::move(p.crossings));
    }
  }
  if (hb >= 0) {
    GeodesicPath p = shortest_from_faces(a, across(mesh_, b, hb));
    const size_t n = p.faces.size();
    if (n > 1 && p.faces[n - 2] == b.face)
      consider({p.faces.begin(), p.faces.end() - 1}, {p.crossings.begin(), p.crossings.end() - 1});
    else {
      p.faces.push_back(b.face);
      p.crossings.push_back(mesh_.twin(hb));
      consider(std::move(p.faces), std::move(p.crossings));
    }
  }
  return best;
}

GeodesicPath GeodesicEngine::shortest_from_faces(const SurfacePoint& a, const SurfacePoint& b) const {
  std::vector<int> faces, crossings;
  seed_strip(a, b, faces, crossings);
  GeodesicPath best = straighten(a, b, std::move(faces), std::move(crossings));

  // The straightened path is only locally shortest. A shorter one can pass on
  // the other side of a curved vertex, so also straighten routes forced
  // through the curved vertices closest to the current path.
  const int K = opts_.via_candidates;
  if (K <= 0 || best.faces.size() < 2) return best;
  const double reach = 1.25 * best.length;
  const auto ta = graph_.tree(mesh_, a, reach), tb = graph_.tree(mesh_, b, reach);
  std::vector<std::pair<double, int>> cand;
  for (int v = 0; v < mesh_.num_vertices(); ++v) {
    if (mesh_.is_boundary_vertex(v) || mesh_.angle_defect(v) < 1e-9) continue;
    double d = ta.dist[v] + tb.dist[v];
    if (d < reach) cand.emplace_back(d, v);
  }
  std::sort(cand.begin(), cand.end());
  if (static_cast<int>(cand.size()) > K) cand.resize(K);
  std::set<std::vector<int>> done{best.faces};
  for (const auto& [d, v] : cand) {
    auto hops = SteinerGraph::hops_to(ta, v);
    auto back = SteinerGraph::hops_to(tb, v);
    // b's route to v, walked backwards from v
    for (size_t j = back.size(); j-- > 0;) {
      int node = j > 0 ? back[j - 1].node : -1;
      hops.push_back({node, back[j].face});
    }
    try {
      std::vector<int> faces, crossings;
      strip_from_hops(a, b, hops, faces, crossings);
      if (!done.insert(faces).second) continue;
      GeodesicPath alt = straighten(a, b, std::move(faces), std::move(crossings));
      if (alt.length < best.length - 1e-12) best = std::move(alt);
    } catch (const GeodesicError&) {
    }
  }

  // The seed can also pass a curved vertex on the wrong side when both sides
  // differ by less than the graph error. Try the far side of every curved
  // vertex the strip wraps; straightening is cheap next to the graph search.
  for (int round = 0; round < 8; ++round) {
    const Strip s{best.faces, best.crossings};
    const int m = static_cast<int>(s.crossings.size());
    auto touches = [&](int p, int v) { return mesh_.tail(s.crossings[p - 1]) == v || mesh_.tip(s.crossings[p - 1]) == v; };
    bool improved = false;
    for (int p = 1; p <= m && !improved; ++p)
      for (int v : {mesh_.tail(s.crossings[p - 1]), mesh_.tip(s.crossings[p - 1])}) {
        if ((p > 1 && touches(p - 1, v)) || mesh_.is_boundary_vertex(v) || std::abs(mesh_.angle_defect(v)) < 1e-9)
          continue;
        int pl = p;
        while (pl < m && touches(pl + 1, v)) ++pl;
        Strip n;
        if (!swap_fan(mesh_, s, p, pl, v, n) || !done.insert(n.faces).second) continue;
        try {
          GeodesicPath alt = straighten(a, b, std::move(n.faces), std::move(n.crossings));
          if (alt.length < best.length - 1e-12) {
            best = std::move(alt);
            improved = true;
            break;
          }
        } catch (const GeodesicError&) {
        }
      }
    if (!improved) break;
  }
  return best;
}

}  // namespace geodiff
