#pragma once

#include <memory>
#include <vector>

#include "geodiff/mesh.hpp"
#include "geodiff/mollifier.hpp"

namespace geodiff {

struct GeodesicOptions {
  int steiner_points = 3;  // per edge, for the seed graph
  Mollifier mollifier{};   // also applied to endpoint barycentrics
  int max_pivots = 10000;
  // Extra seeds routed through curved vertices near the path; the straightened
  // path is only locally shortest otherwise. 0 turns the search off.
  int via_candidates = 64;
};

// Endpoint weights actually used for a geodesic endpoint: mollified (when on)
// and renormalized.
Vec3 effective_weights(const Vec3& w, const Mollifier& m);
Vec3 effective_position(const TriangleMesh& mesh, const SurfacePoint& p, const Mollifier& m);

// A locally shortest path through a fixed strip of faces.
struct GeodesicPath {
  SurfacePoint start, end;
  std::vector<int> faces;      // f_0 .. f_m
  std::vector<int> crossings;  // halfedge of f_i crossed into f_{i+1}; size m
  std::vector<double> t;       // position on crossings[i]: tail + t (tip - tail)
  std::vector<Vec3> points;    // start, x_1 .. x_m, end
  double length = 0.0;
  int pivots = 0;
  double stationarity = 0.0;  // max |dg/dt| over crossings strictly inside their edge
};

// Graph on mesh vertices plus k evenly spaced points per edge, complete inside
// each face. Distances are lengths of surface paths, so they bound the exact
// geodesic distance from above.
class SteinerGraph {
 public:
  SteinerGraph() = default;
  SteinerGraph(const TriangleMesh& mesh, int k);

  int num_nodes() const { return static_cast<int>(pos_.size()); }
  int k() const { return k_; }
  const Vec3& node_position(int n) const { return pos_[n]; }
  bool is_vertex(int n) const { return n < nv_; }
  int node_edge(int n) const { return (n - nv_) / k_; }

  struct Hop {
    int node;  // graph node reached (-1 for the target)
    int face;  // face the hop runs through
  };
  struct Route {
    double distance = 0.0;
    std::vector<Hop> hops;  // from source to target; last hop has node -1
  };
  Route shortest(const TriangleMesh& mesh, const SurfacePoint& a, const SurfacePoint& b) const;
  double distance(const TriangleMesh& mesh, const SurfacePoint& a, const SurfacePoint& b) const;

  // Shortest-path tree from a surface point, settled out to the given radius.
  struct Tree {
    std::vector<double> dist;
    std::vector<int> prev;  // -2 marks nodes reached straight from the source
    std::vector<int> face;
  };
  Tree tree(const TriangleMesh& mesh, const SurfacePoint& a, double radius = 1e300) const;
  // Hops from the source of t to node n (last hop reaches n).
  static std::vector<Hop> hops_to(const Tree& t, int n);

  // Nearest-source labels and distances for every mesh vertex.
  void multi_source(const TriangleMesh& mesh, const std::vector<SurfacePoint>& sources, std::vector<int>& label,
                    std::vector<double>& dist) const;

 private:
  int k_ = 0;
  int nv_ = 0;
  std::vector<Vec3> pos_;
  std::vector<std::vector<int>> node_faces_;
  std::vector<std::vector<int>> face_nodes_;
};

// Exact shortest-path machinery on a fixed mesh: seed strips come from a
// Steiner graph, then the strip is unfolded, straightened and pivoted.
class GeodesicEngine {
 public:
  explicit GeodesicEngine(TriangleMesh mesh, GeodesicOptions opts = {});

  const TriangleMesh& mesh() const { return mesh_; }
  const GeodesicOptions& options() const { return opts_; }
  const SteinerGraph& graph() const { return graph_; }

  GeodesicPath shortest(const SurfacePoint& a, const SurfacePoint& b) const;
  // Straighten along a given face strip (first face contains a, last contains b).
  GeodesicPath straighten(const SurfacePoint& a, const SurfacePoint& b, std::vector<int> faces,
                          std::vector<int> crossings) const;
  // Seed strip from the Steiner graph.
  void seed_strip(const SurfacePoint& a, const SurfacePoint& b, std::vector<int>& faces,
                  std::vector<int>& crossings) const;

 private:
  void strip_from_hops(const SurfacePoint& a, const SurfacePoint& b, const std::vector<SteinerGraph::Hop>& hops,
                       std::vector<int>& faces, std::vector<int>& crossings) const;
  GeodesicPath shortest_from_faces(const SurfacePoint& a, const SurfacePoint& b) const;

  TriangleMesh mesh_;
  GeodesicOptions opts_;
  SteinerGraph graph_;
};

// Steiner-graph distance with k points per edge (upper bound on the geodesic).
double oracle_distance(const TriangleMesh& mesh, const SurfacePoint& a, const SurfacePoint& b, int k);

}  // namespace geodiff
