#include "geodiff/gvd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>

#include "geodiff/parallel.hpp"
#include "geodiff/trace.hpp"

namespace geodiff {

namespace {

// Length and dg/dw of both endpoints, each in its own face.
struct PairGrad {
  double g = 0.0;
  Vec3 gp = Vec3::Zero(), gq = Vec3::Zero();
};

PairGrad pair_grad(const GeodesicEngine& eng, const SurfacePoint& p, const SurfacePoint& q, bool grad) {
  const TriangleMesh& mesh = eng.mesh();
  GeodesicPath path = eng.shortest(p, q);
  PairGrad out;
  out.g = path.length;
  if (!grad) return out;
  JetOptions jo;
  jo.order = 1;
  DistanceJet j = distance_jet(mesh, path, eng.options().mollifier, jo);
  // the path may hold an endpoint in another face that contains it; match by vertex
  auto remap = [&](const SurfacePoint& x, int pf, int off) {
    Vec3 r = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
      int l = mesh.local_index(pf, mesh.face(x.face)[k]);
      if (l >= 0) r[k] = j.grad[off + l];
    }
    return r;
  };
  out.gp = remap(p, path.start.face, 0);
  out.gq = remap(q, path.end.face, 3);
  return out;
}

Vec2 tangent(const Vec3& gw) { return tangent_basis().transpose() * gw; }

SurfacePoint edge_point(int h, double tau) {
  SurfacePoint x;
  x.face = TriangleMesh::he_face(h);
  const int k = h % 3;
  x.w = Vec3::Zero();
  x.w[k] = 1 - tau;
  x.w[(k + 1) % 3] = tau;
  return x;
}

int other_site(const BoundaryVertex& n) { return n.sites[0] == n.tail_site ? n.sites[1] : n.sites[0]; }

double residual_of(const GeodesicEngine& eng, const SurfacePoint& x, const std::vector<int>& sites,
                   const std::vector<SurfacePoint>& s) {
  double g0 = eng.shortest(x, s[sites[0]]).length, r = 0;
  for (size_t j = 1; j < sites.size(); ++j) r = std::max(r, std::abs(g0 - eng.shortest(x, s[sites[j]]).length));
  return r / (1 + g0);
}

void refine_crossing(const GeodesicEngine& eng, const std::vector<SurfacePoint>& s, BoundaryVertex& n,
                     const GvdOptions& opts) {
  const int a = n.tail_site, b = other_site(n), k = n.halfedge % 3;
  // f(tau) = g(x, a) - g(x, b): f(0) <= 0 <= f(1) by construction of the labels
  double lo = 0, hi = 1, tau = std::clamp(n.tau, 0.0, 1.0), res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 4 * opts.max_newton; ++it) {
    SurfacePoint x = edge_point(n.halfedge, tau);
    PairGrad ga = pair_grad(eng, x, s[a], true), gb = pair_grad(eng, x, s[b], true);
    const double f = ga.g - gb.g;
    res = std::abs(f) / (1 + ga.g);
    n.x = x;
    n.tau = tau;
    if (res <= 1e-14) break;
    (f < 0 ? lo : hi) = tau;
    if (hi - lo < 1e-15) break;
    const double df = (ga.gp[(k + 1) % 3] - ga.gp[k]) - (gb.gp[(k + 1) % 3] - gb.gp[k]);
    double next = tau - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    tau = next;
  }
  n.residual = res;
  n.refined = true;
  if (!(res <= opts.tol_eq))
    throw GvdError("edge crossing on mesh edge " + std::to_string(n.edge) + " did not converge (residual " +
                   std::to_string(res) + ")");
}

struct VertexEval {
  Vec2 f;
  Mat2 J;
  double g0 = 0;
  Mat2 dsite[3];  // df/ds_k in site k's tangent frame
};

VertexEval eval_vertex(const GeodesicEngine& eng, const std::vector<SurfacePoint>& s, const SurfacePoint& y,
                       const std::vector<int>& sites, bool grad) {
  PairGrad g[3];
  for (int k = 0; k < 3; ++k) g[k] = pair_grad(eng, y, s[sites[k]], grad);
  VertexEval e;
  e.g0 = g[0].g;
  e.f << g[0].g - g[1].g, g[0].g - g[2].g;
  if (!grad) return e;
  const Vec2 t0 = tangent(g[0].gp);
  e.J.row(0) = (t0 - tangent(g[1].gp)).transpose();
  e.J.row(1) = (t0 - tangent(g[2].gp)).transpose();
  const Vec2 q0 = tangent(g[0].gq), q1 = tangent(g[1].gq), q2 = tangent(g[2].gq);
  e.dsite[0] << q0.transpose(), q0.transpose();
  e.dsite[1] << -q1.transpose(), 0, 0;
  e.dsite[2] << 0, 0, -q2.transpose();
  return e;
}

void refine_vertex(const GeodesicEngine& eng, const std::vector<SurfacePoint>& s, BoundaryVertex& n,
                   const GvdOptions& opts) {
  const TriangleMesh& mesh = eng.mesh();
  const auto B = tangent_basis();
  for (int it = 0; it < opts.max_newton; ++it) {
    VertexEval e = eval_vertex(eng, s, n.x, n.sites, true);
    if (e.f.cwiseAbs().maxCoeff() / (1 + e.g0) <= 1e-14) break;
    if (!(std::abs(e.J.determinant()) > 1e-300)) break;
    const Vec2 step = -e.J.inverse() * e.f;
    bool moved = false;
    for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
      SurfacePoint y;
      try {
        y = trace(mesh, n.x, B * (alpha * step)).end;
      } catch (const TraceError&) {
        continue;
      }
      VertexEval t = eval_vertex(eng, s, y, n.sites, false);
      if (t.f.cwiseAbs().maxCoeff() < e.f.cwiseAbs().maxCoeff()) {
        n.x = y;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  n.residual = residual_of(eng, n.x, n.sites, s);
  n.refined = true;
  if (!(n.residual <= opts.tol_eq))
    throw GvdError("Voronoi vertex of sites " + std::to_string(n.sites[0]) + "," + std::to_string(n.sites[1]) +
                   "," + std::to_string(n.sites[2]) + " did not converge (residual " + std::to_string(n.residual) +
                   ")");
}

}  // namespace

int VoronoiDiagram::num_cells() const {
  std::set<int> s(label.begin(), label.end());
  return static_cast<int>(s.size());
}

double VoronoiDiagram::max_residual() const {
  double r = 0;
  for (const auto& n : nodes)
    if (n.refined) r = std::max(r, n.residual);
  return r;
}

std::vector<std::vector<int>> VoronoiDiagram::cell_vertices() const {
  std::vector<std::vector<int>> out(sites.size());
  for (int v : vertices)
    for (int s : nodes[v].sites) out[s].push_back(v);
  return out;
}

VoronoiDiagram approximate_gvd(const GeodesicEngine& eng, const std::vector<SurfacePoint>& sites,
                               const GvdOptions& opts) {
  const TriangleMesh& mesh = eng.mesh();
  if (sites.size() < 2) throw GvdError("need >= 2 sites");
  for (size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].face < 0 || sites[i].face >= mesh.num_faces())
      throw GvdError("site " + std::to_string(i) + " has an invalid face");
    for (size_t j = 0; j < i; ++j)
      if ((embed(mesh, sites[i]) - embed(mesh, sites[j])).norm() <= 1e-12 * mesh.bbox_diagonal())
        throw GvdError("sites " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
  }
  VoronoiDiagram d;
  d.sites = sites;
  std::vector<double> gd;
  eng.graph().multi_source(mesh, sites, d.label, gd);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (d.label[v] < 0) throw GvdError("vertex " + std::to_string(v) + " is unreachable from every site");

  // exact distances along label changes, cached per (vertex, site)
  std::map<std::pair<int, int>, double> cache;
  std::mutex mu;
  auto exact = [&](int v, int s) {
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = cache.find({v, s});
      if (it != cache.end()) return it->second;
    }
    double g = eng.shortest(vertex_point(mesh, v), sites[s]).length;
    std::lock_guard<std::mutex> lock(mu);
    cache[{v, s}] = g;
    return g;
  };
  auto boundary_edges = [&] {
    std::vector<int> out;
    for (int e = 0; e < mesh.num_edges(); ++e) {
      int h = mesh.edge_halfedge(e);
      if (d.label[mesh.tail(h)] != d.label[mesh.tip(h)]) out.push_back(e);
    }
    return out;
  };
  for (int round = 0; round < opts.relabel_rounds; ++round) {
    std::vector<int> edges = boundary_edges();
    std::vector<std::array<int, 4>> change(edges.size(), {-1, -1, -1, -1});
    parallel_for(edges.size(), [&](std::size_t i) {
      int h = mesh.edge_halfedge(edges[i]);
      int u = mesh.tail(h), v = mesh.tip(h), a = d.label[u], b = d.label[v];
      if (exact(u, b) < exact(u, a)) change[i][0] = u, change[i][1] = b;
      if (exact(v, a) < exact(v, b)) change[i][2] = v, change[i][3] = a;
    });
    bool any = false;
    std::vector<int> next = d.label;
    for (const auto& c : change)
      for (int k : {0, 2})
        if (c[k] >= 0) {
          next[c[k]] = c[k + 1];
          any = true;
        }
    d.label = std::move(next);
    if (!any) break;
  }

  std::vector<int> edge_node(mesh.num_edges(), -1);
  std::vector<int> edges = boundary_edges();
  std::vector<BoundaryVertex> crossings(edges.size());
  parallel_for(edges.size(), [&](std::size_t i) {
    int h = mesh.edge_halfedge(edges[i]);
    int u = mesh.tail(h), v = mesh.tip(h), a = d.label[u], b = d.label[v];
    double f0 = exact(u, a) - exact(u, b), f1 = exact(v, a) - exact(v, b);
    BoundaryVertex& n = crossings[i];
    n.tau = f1 != f0 ? std::clamp(f0 / (f0 - f1), 0.0, 1.0) : 0.5;
    n.edge = edges[i];
    n.halfedge = h;
    n.tail_site = a;
    n.sites = {std::min(a, b), std::max(a, b)};
    n.x = edge_point(h, n.tau);
  });
  for (size_t i = 0; i < edges.size(); ++i) {
    edge_node[edges[i]] = static_cast<int>(d.nodes.size());
    d.nodes.push_back(std::move(crossings[i]));
  }

  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.face(f);
    std::set<int> labels{d.label[t[0]], d.label[t[1]], d.label[t[2]]};
    if (labels.size() == 1) continue;
    std::vector<int> cross;
    for (int k = 0; k < 3; ++k) {
      int e = mesh.edge_of(3 * f + k);
      if (edge_node[e] >= 0) cross.push_back(edge_node[e]);
    }
    if (labels.size() == 2) {
      const auto& n = d.nodes[cross[0]];
      d.segments.push_back({cross[0], cross[1], n.sites[0], n.sites[1]});
      continue;
    }
    BoundaryVertex v;
    v.x = SurfacePoint{f, Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3)};
    v.sites.assign(labels.begin(), labels.end());
    const int id = static_cast<int>(d.nodes.size());
    d.nodes.push_back(v);
    for (int c : cross) d.segments.push_back({id, c, d.nodes[c].sites[0], d.nodes[c].sites[1]});
  }
  for (int i = 0; i < static_cast<int>(d.nodes.size()); ++i)
    if (d.nodes[i].is_voronoi_vertex()) d.vertices.push_back(i);
  return d;
}

void refine_gvd(const GeodesicEngine& eng, VoronoiDiagram& d, const GvdOptions& opts) {
  const TriangleMesh& mesh = eng.mesh();
  parallel_for(d.nodes.size(), [&](std::size_t i) {
    BoundaryVertex& n = d.nodes[i];
    if (n.is_voronoi_vertex())
      refine_vertex(eng, d.sites, n, opts);
    else if (opts.refine_crossings)
      refine_crossing(eng, d.sites, n, opts);
  });

  // Voronoi vertices where four or more cells meet show up once per face
  // triple; merge the copies.
  const double close = 1e-7 * mesh.bbox_diagonal();
  std::vector<int> alias(d.nodes.size());
  for (size_t i = 0; i < alias.size(); ++i) alias[i] = static_cast<int>(i);
  bool merged = false;
  for (size_t a = 0; a < d.vertices.size(); ++a) {
    int i = d.vertices[a];
    if (alias[i] != i) continue;
    for (size_t b = a + 1; b < d.vertices.size(); ++b) {
      int j = d.vertices[b];
      if (alias[j] != j) continue;
      if ((embed(mesh, d.nodes[i].x) - embed(mesh, d.nodes[j].x)).norm() > close) continue;
      std::set<int> u(d.nodes[i].sites.begin(), d.nodes[i].sites.end());
      u.insert(d.nodes[j].sites.begin(), d.nodes[j].sites.end());
      d.nodes[i].sites.assign(u.begin(), u.end());
      alias[j] = i;
      merged = true;
    }
  }
  if (merged) {
    std::vector<int> index(d.nodes.size(), -1);
    std::vector<BoundaryVertex> kept;
    for (size_t i = 0; i < d.nodes.size(); ++i)
      if (alias[i] == static_cast<int>(i)) {
        index[i] = static_cast<int>(kept.size());
        kept.push_back(std::move(d.nodes[i]));
      }
    for (auto& s : d.segments) {
      s.a = index[alias[s.a]];
      s.b = index[alias[s.b]];
    }
    d.nodes = std::move(kept);
    d.vertices.clear();
    for (int i = 0; i < static_cast<int>(d.nodes.size()); ++i)
      if (d.nodes[i].is_voronoi_vertex()) {
        d.vertices.push_back(i);
        if (d.nodes[i].sites.size() > 3) d.nodes[i].residual = residual_of(eng, d.nodes[i].x, d.nodes[i].sites, d.sites);
      }
  }

  d.arcs.clear();
  std::map<std::pair<int, int>, std::vector<int>> shared;
  for (int v : d.vertices) {
    const auto& s = d.nodes[v].sites;
    for (size_t i = 0; i < s.size(); ++i)
      for (size_t j = i + 1; j < s.size(); ++j) shared[{s[i], s[j]}].push_back(v);
  }
  for (const auto& [pair, vs] : shared)
    if (vs.size() == 2) d.arcs.push_back({vs[0], vs[1], pair.first, pair.second});
}

VoronoiDiagram compute_gvd(const GeodesicEngine& eng, const std::vector<SurfacePoint>& sites,
                           const GvdOptions& opts) {
  VoronoiDiagram d = approximate_gvd(eng, sites, opts);
  refine_gvd(eng, d, opts);
  return d;
}

NodeSensitivity node_sensitivity(const GeodesicEngine& eng, const VoronoiDiagram& d, int node) {
  const BoundaryVertex& n = d.nodes[node];
  NodeSensitivity out;
  out.sites = n.sites;
  const int ns = static_cast<int>(n.sites.size());
  auto col = [&](int site) { return 2 * static_cast<int>(std::find(n.sites.begin(), n.sites.end(), site) - n.sites.begin()); };
  if (!n.is_voronoi_vertex()) {
    const int a = n.tail_site, b = other_site(n), k = n.halfedge % 3;
    PairGrad ga = pair_grad(eng, n.x, d.sites[a], true), gb = pair_grad(eng, n.x, d.sites[b], true);
    const double df = (ga.gp[(k + 1) % 3] - ga.gp[k]) - (gb.gp[(k + 1) % 3] - gb.gp[k]);
    if (!(std::abs(df) > 1e-12)) throw GvdError("crossing on mesh edge " + std::to_string(n.edge) + " is tangent to the bisector");
    out.d = MatX::Zero(1, 2 * ns);
    out.d.block<1, 2>(0, col(a)) = -tangent(ga.gq).transpose() / df;
    out.d.block<1, 2>(0, col(b)) = tangent(gb.gq).transpose() / df;
    return out;
  }
  VertexEval e = eval_vertex(eng, d.sites, n.x, n.sites, true);
  if (!(std::abs(e.J.determinant()) > 1e-14 * std::max(1.0, e.J.squaredNorm())))
    throw GvdError("singular equidistance Jacobian at a Voronoi vertex");
  const Mat2 Ji = e.J.inverse();
  out.d = MatX::Zero(2, 2 * ns);
  for (int k = 0; k < 3; ++k) out.d.block<2, 2>(0, col(n.sites[k])) = -Ji * e.dsite[k];
  return out;
}

std::vector<NodeSensitivity> boundary_sensitivity(const GeodesicEngine& eng, const VoronoiDiagram& d) {
  std::vector<NodeSensitivity> out(d.nodes.size());
  parallel_for(d.nodes.size(), [&](std::size_t i) { out[i] = node_sensitivity(eng, d, static_cast<int>(i)); });
  return out;
}

const char* to_string(GvdObjectiveKind k) {
  switch (k) {
    case GvdObjectiveKind::Uniformity: return "uniformity";
    case GvdObjectiveKind::Planarity: return "planarity";
    case GvdObjectiveKind::Regularity: return "regularity";
  }
  return "?";
}

GvdObjectiveKind parse_gvd_objective(const std::string& s) {
  if (s == "uniformity") return GvdObjectiveKind::Uniformity;
  if (s == "planarity") return GvdObjectiveKind::Planarity;
  if (s == "regularity") return GvdObjectiveKind::Regularity;
  throw GvdError("unknown objective '" + s + "' (expected uniformity, planarity or regularity)");
}

namespace {

struct PlaneFit {
  Vec3 c, n;
  double lambda = 0.0, gap = 0.0;  // smallest eigenvalue and distance to the next
};

PlaneFit fit_plane(const std::vector<Vec3>& X) {
  PlaneFit p;
  p.c = Vec3::Zero();
  for (const auto& x : X) p.c += x;
  p.c /= static_cast<double>(X.size());
  Mat3 C = Mat3::Zero();
  for (const auto& x : X) C += (x - p.c) * (x - p.c).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(C);
  p.lambda = std::max(es.eigenvalues()[0], 0.0);
  p.gap = es.eigenvalues()[1] - es.eigenvalues()[0];
  p.n = es.eigenvectors().col(0);
  return p;
}

}  // namespace

ObjectiveJet objective_jet(const GeodesicEngine& eng, const VoronoiDiagram& d, const GvdObjective& obj,
                           bool gradient) {
  const TriangleMesh& mesh = eng.mesh();
  const int ns = static_cast<int>(d.sites.size());
  ObjectiveJet out;
  out.grad = VecX::Zero(2 * ns);

  // dO/dy per Voronoi vertex (tangent coordinates of its face), direct dO/ds
  std::map<int, Vec2> dy;
  auto acc = [&](int v) -> Vec2& { return dy.try_emplace(v, Vec2::Zero()).first->second; };
  auto add_site = [&](int s, const Vec2& g) { out.grad.segment<2>(2 * s) += g; };

  switch (obj.kind) {
    case GvdObjectiveKind::Uniformity: {
      if (!(obj.target_length > 0)) throw GvdError("uniformity target length must be positive");
      std::vector<PairGrad> pg(d.arcs.size());
      parallel_for(d.arcs.size(), [&](std::size_t i) {
        pg[i] = pair_grad(eng, d.nodes[d.arcs[i].a].x, d.nodes[d.arcs[i].b].x, gradient);
      });
      for (size_t i = 0; i < d.arcs.size(); ++i) {
        const double r = pg[i].g - obj.target_length;
        out.value += r * r;
        if (!gradient) continue;
        acc(d.arcs[i].a) += Vec2(2 * r * tangent(pg[i].gp));
        acc(d.arcs[i].b) += Vec2(2 * r * tangent(pg[i].gq));
      }
      break;
    }
    case GvdObjectiveKind::Regularity: {
      std::vector<std::pair<int, int>> terms;  // (vertex node, site)
      for (int v : d.vertices)
        for (int s : d.nodes[v].sites) terms.emplace_back(v, s);
      std::vector<PairGrad> pg(terms.size());
      parallel_for(terms.size(), [&](std::size_t i) {
        pg[i] = pair_grad(eng, d.nodes[terms[i].first].x, d.sites[terms[i].second], gradient);
      });
      for (size_t i = 0; i < terms.size(); ++i) {
        const double g = pg[i].g;
        out.value += g * g;
        if (!gradient) continue;
        acc(terms[i].first) += Vec2(2 * g * tangent(pg[i].gp));
        add_site(terms[i].second, 2 * g * tangent(pg[i].gq));
      }
      break;
    }
    case GvdObjectiveKind::Planarity: {
      for (const auto& cell : d.cell_vertices()) {
        if (cell.size() < 3) continue;
        std::vector<Vec3> X;
        for (int v : cell) X.push_back(embed(mesh, d.nodes[v].x));
        PlaneFit p = fit_plane(X);
        if (p.gap < 1e-12) ++out.degenerate_fits;
        out.value += p.lambda;
        if (!gradient) continue;
        for (size_t j = 0; j < cell.size(); ++j) {
          const Vec3 dX = 2 * p.n.dot(X[j] - p.c) * p.n;
          acc(cell[j]) += Vec2(tangent_frame(mesh, d.nodes[cell[j]].x.face).transpose() * dX);
        }
      }
      break;
    }
  }
  if (!gradient) return out;

  std::vector<int> nodes;
  for (const auto& [v, g] : dy) nodes.push_back(v);
  std::vector<NodeSensitivity> sens(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t i) { sens[i] = node_sensitivity(eng, d, nodes[i]); });
  for (size_t i = 0; i < nodes.size(); ++i) {
    const Vec2& c = dy[nodes[i]];
    for (size_t k = 0; k < sens[i].sites.size(); ++k)
      add_site(sens[i].sites[k], sens[i].d.block(0, 2 * k, 2, 2).transpose() * c);
  }
  return out;
}

double mean_plane_distance(const TriangleMesh& mesh, const VoronoiDiagram& d) {
  double sum = 0;
  int count = 0;
  for (const auto& cell : d.cell_vertices()) {
    if (cell.size() < 3) continue;
    std::vector<Vec3> X;
    for (int v : cell) X.push_back(embed(mesh, d.nodes[v].x));
    PlaneFit p = fit_plane(X);
    for (const auto& x : X) sum += std::abs(p.n.dot(x - p.c));
    count += static_cast<int>(X.size());
  }
  return count ? sum / count : 0.0;
}

std::vector<Local> GvdTerm::evaluate(const EvalContext& ctx) const {
  if (ctx.order >= 2) throw EnergyError("the diagram objective has no Hessian; use lbfgs or gd");
  Local l;
  VoronoiDiagram d;
  try {
    d = compute_gvd(ctx.engine, ctx.state.points, opts_);
  } catch (const GvdError&) {
    l.value = std::numeric_limits<double>::infinity();
    return {l};
  } catch (const GeodesicError&) {
    l.value = std::numeric_limits<double>::infinity();
    return {l};
  }
  ObjectiveJet j = objective_jet(ctx.engine, d, obj_, ctx.order >= 1);
  l.value = j.value;
  if (ctx.order >= 1) {
    // B^T (0, a, b) = (a, b)
    const int ns = static_cast<int>(d.sites.size());
    l.grad = VecX::Zero(3 * ns);
    for (int i = 0; i < ns; ++i) {
      for (int c = 0; c < 3; ++c) l.idx.push_back(point_index(i, c));
      l.grad[3 * i + 1] = j.grad[2 * i];
      l.grad[3 * i + 2] = j.grad[2 * i + 1];
    }
  }
  return {l};
}

GvdRun optimize_sites(const TriangleMesh& mesh, const std::vector<SurfacePoint>& sites, const GvdObjective& obj,
                      SolverConfig cfg, const GvdOptions& opts, const GeodesicOptions& geo) {
  if (cfg.method == Method::Newton) throw SolverError("site optimization needs lbfgs or gd");
  GvdRun run;
  GeodesicEngine eng(mesh, geo);
  run.initial = compute_gvd(eng, sites, opts);
  GvdOptions inner = opts;
  inner.refine_crossings = false;
  EnergyProblem prob(mesh, geo);
  prob.add(std::make_shared<GvdTerm>(obj, inner));
  prob.set_layout(static_cast<int>(sites.size()), {});
  run.solve = minimize(prob, prob.initial_state(sites), cfg);
  run.final = compute_gvd(eng, run.solve.state.points, opts);
  return run;
}

}  // namespace geodiff
