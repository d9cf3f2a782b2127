#pragma once

#include <vector>

#include "geodiff/energy.hpp"
#include "geodiff/geodesic.hpp"
#include "geodiff/solver.hpp"

namespace geodiff {

struct GvdOptions {
  double tol_eq = 1e-8;  // equidistance residual after refinement, relative to 1 + g
  int max_newton = 40;
  int relabel_rounds = 10;
  // Refine edge crossings too. The objectives only read Voronoi vertices, so
  // the outer loop can skip them.
  bool refine_crossings = true;
};

// A point on the diagram's boundary: an edge crossing between two cells or a
// Voronoi vertex where three or more meet.
struct BoundaryVertex {
  SurfacePoint x;
  std::vector<int> sites;  // sorted
  int edge = -1;           // crossings: mesh edge; x = tail + tau (tip - tail) on halfedge
  int halfedge = -1;
  double tau = 0.0;
  int tail_site = -1;  // crossings: site owning the halfedge tail
  double residual = 0.0;  // max_j |g(x,s_0) - g(x,s_j)| / (1 + g(x,s_0))
  bool refined = false;
  bool is_voronoi_vertex() const { return sites.size() >= 3; }
};

// Piece of a Voronoi edge between two boundary vertices inside one face.
struct VoronoiSegment {
  int a = -1, b = -1;
  int s0 = -1, s1 = -1;
};

// Voronoi edge between two Voronoi vertices that share the sites s0, s1.
struct VoronoiArc {
  int a = -1, b = -1;
  int s0 = -1, s1 = -1;
};

struct VoronoiDiagram {
  std::vector<SurfacePoint> sites;
  std::vector<int> label;  // nearest site per mesh vertex
  std::vector<BoundaryVertex> nodes;
  std::vector<VoronoiSegment> segments;
  std::vector<int> vertices;  // node indices of Voronoi vertices
  std::vector<VoronoiArc> arcs;

  int num_cells() const;
  double max_residual() const;  // over refined nodes
  // Voronoi vertex node indices per site.
  std::vector<std::vector<int>> cell_vertices() const;
};

// Nearest-site labels (Steiner graph, corrected with exact distances along
// the cell boundaries) and seeds for every boundary vertex.
VoronoiDiagram approximate_gvd(const GeodesicEngine& eng, const std::vector<SurfacePoint>& sites,
                               const GvdOptions& opts = {});
// Newton refinement of the seeds, merging of coincident Voronoi vertices and
// arc extraction. Throws GvdError when a node does not converge.
void refine_gvd(const GeodesicEngine& eng, VoronoiDiagram& d, const GvdOptions& opts = {});
VoronoiDiagram compute_gvd(const GeodesicEngine& eng, const std::vector<SurfacePoint>& sites,
                           const GvdOptions& opts = {});

// dx/ds for one node: rows are the node's local coordinates (tau for a
// crossing, tangent (a,b) of its face for a Voronoi vertex), columns the
// tangent coordinates of node.sites in order.
struct NodeSensitivity {
  std::vector<int> sites;
  MatX d;
};
NodeSensitivity node_sensitivity(const GeodesicEngine& eng, const VoronoiDiagram& d, int node);
std::vector<NodeSensitivity> boundary_sensitivity(const GeodesicEngine& eng, const VoronoiDiagram& d);

enum class GvdObjectiveKind { Uniformity, Planarity, Regularity };
const char* to_string(GvdObjectiveKind k);
GvdObjectiveKind parse_gvd_objective(const std::string& s);

struct GvdObjective {
  GvdObjectiveKind kind = GvdObjectiveKind::Uniformity;
  double target_length = 0.1;  // uniformity
};

struct ObjectiveJet {
  double value = 0.0;
  VecX grad;  // 2 tangent coordinates per site
  int degenerate_fits = 0;  // planarity cells whose plane fit hit the eigenvalue floor
};
ObjectiveJet objective_jet(const GeodesicEngine& eng, const VoronoiDiagram& d, const GvdObjective& obj,
                           bool gradient = true);

// Mean distance of Voronoi vertices to their cell's least-squares plane.
double mean_plane_distance(const TriangleMesh& mesh, const VoronoiDiagram& d);

// Outer objective as an energy term over the site positions (state.points).
class GvdTerm : public EnergyTerm {
 public:
  GvdTerm(GvdObjective obj, GvdOptions opts) : obj_(obj), opts_(opts) {}
  std::string name() const override { return "gvd"; }
  std::vector<Local> evaluate(const EvalContext& ctx) const override;

 private:
  GvdObjective obj_;
  GvdOptions opts_;
};

struct GvdRun {
  SolveResult solve;
  VoronoiDiagram initial, final;
};
// L-BFGS over the site positions; each trial point rebuilds the diagram.
GvdRun optimize_sites(const TriangleMesh& mesh, const std::vector<SurfacePoint>& sites, const GvdObjective& obj,
                      SolverConfig cfg, const GvdOptions& opts = {}, const GeodesicOptions& geo = {});

}  // namespace geodiff
