#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "geodiff/types.hpp"

namespace geodiff {

// Halfedge h = 3*f + k runs from face(f)[k] to face(f)[(k+1)%3].
class TriangleMesh {
 public:
  TriangleMesh() = default;

  // Validates manifoldness, orientation, connectivity and non-degeneracy.
  static TriangleMesh build(std::vector<Vec3> positions, std::vector<std::array<int, 3>> faces);

  int num_vertices() const { return static_cast<int>(positions_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int num_halfedges() const { return 3 * num_faces(); }
  int num_edges() const { return static_cast<int>(edge_halfedge_.size()); }

  const Vec3& position(int v) const { return positions_[v]; }
  const std::vector<Vec3>& positions() const { return positions_; }
  const std::array<int, 3>& face(int f) const { return faces_[f]; }
  const std::vector<std::array<int, 3>>& faces() const { return faces_; }

  static int he_face(int h) { return h / 3; }
  static int next(int h) { return 3 * (h / 3) + (h % 3 + 1) % 3; }
  static int prev(int h) { return 3 * (h / 3) + (h % 3 + 2) % 3; }
  int tail(int h) const { return faces_[h / 3][h % 3]; }
  int tip(int h) const { return faces_[h / 3][(h % 3 + 1) % 3]; }
  int twin(int h) const { return twin_[h]; }
  int edge_of(int h) const { return edge_of_[h]; }
  // Canonical halfedge of an edge: the one in the lower-index face.
  int edge_halfedge(int e) const { return edge_halfedge_[e]; }
  // Some outgoing halfedge; on the boundary the outgoing boundary halfedge, so
  // ccw rotation h -> twin(prev(h)) sweeps the whole fan.
  int vertex_halfedge(int v) const { return vertex_he_[v]; }

  Vec3 he_vector(int h) const { return positions_[tip(h)] - positions_[tail(h)]; }
  double he_length(int h) const { return he_vector(h).norm(); }
  // Interior angle at tail(h) inside face he_face(h).
  double corner_angle(int h) const;
  // Local index of vertex v in face f, or -1.
  int local_index(int f, int v) const;

  Vec3 face_normal(int f) const;
  double face_area(int f) const;
  double total_area() const;
  double bbox_diagonal() const;
  double mean_edge_length() const;

  bool is_boundary_vertex(int v) const { return boundary_vertex_[v]; }
  bool is_boundary_edge(int h) const { return twin_[h] < 0; }
  // 2*pi - angle sum for interior vertices, pi - angle sum on the boundary.
  double angle_defect(int v) const;
  double angle_sum(int v) const;
  int euler_characteristic() const { return num_vertices() - num_edges() + num_faces(); }

  // Faces around v in ccw order, starting from face of vertex_halfedge(v).
  std::vector<int> vertex_faces(int v) const;
  // Outgoing halfedges around v in ccw order.
  std::vector<int> vertex_outgoing(int v) const;

  // Same connectivity, new vertex positions (no validation besides size).
  TriangleMesh with_positions(std::vector<Vec3> positions) const;
  // Uniform scaling so the bounding box diagonal is 1.
  void normalize();

 private:
  void build_connectivity();

  std::vector<Vec3> positions_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<int> twin_;
  std::vector<int> edge_of_;
  std::vector<int> edge_halfedge_;
  std::vector<int> vertex_he_;
  std::vector<char> boundary_vertex_;
};

TriangleMesh load_obj(const std::string& path, bool normalize = false);
TriangleMesh parse_obj(std::istream& in, bool normalize = false);
void save_obj(const TriangleMesh& mesh, const std::string& path);

// A point on the surface: a face and barycentric weights summing to one.
struct SurfacePoint {
  int face = 0;
  Vec3 w = Vec3(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
};

enum class VertexKind { Spherical, Flat, Hyperbolic, Boundary };
const char* to_string(VertexKind k);
VertexKind classify_vertex(const TriangleMesh& mesh, int v, double tol = 1e-10);

Vec3 embed(const TriangleMesh& mesh, const SurfacePoint& p);
// Clamps tiny negative weights, renormalizes and moves points on edges or
// vertices to the lowest-index incident face.
SurfacePoint canonicalize(const TriangleMesh& mesh, SurfacePoint p, double tol = 1e-14);
// Same point expressed in another face that contains it.
bool express_in_face(const TriangleMesh& mesh, const SurfacePoint& p, int face, SurfacePoint& out,
                     double tol = 1e-12);
SurfacePoint vertex_point(const TriangleMesh& mesh, int v);
// Outermost point hit by the ray from the origin along dir.
SurfacePoint locate_direction(const TriangleMesh& mesh, const Vec3& dir);
// Closest surface point to q (brute force over faces).
SurfacePoint closest_point(const TriangleMesh& mesh, const Vec3& q);

// Tangent basis for barycentric increments: dw = B * (a, b) with B = [-1 -1; 1 0; 0 1].
Eigen::Matrix<double, 3, 2> tangent_basis();
// 3x2 matrix mapping local (a,b) increments to 3D displacements in face f.
Eigen::Matrix<double, 3, 2> tangent_frame(const TriangleMesh& mesh, int f);
// Local (a,b) coordinates of the in-plane part of a 3D displacement in face f.
Vec2 to_local(const TriangleMesh& mesh, int f, const Vec3& d);

}  // namespace geodiff
