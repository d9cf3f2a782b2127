#pragma once

#include "geodiff/mesh.hpp"

namespace geodiff {

struct TraceResult {
  SurfacePoint end;
  // Rotation carrying tangent vectors of the start face to the end face,
  // composed from the edge unfoldings (and vertex turns) along the trace.
  Mat3 transport = Mat3::Identity();
  int faces_crossed = 0;
  bool hit_boundary = false;
  double length = 0.0;  // arc length actually travelled
};

struct TraceOptions {
  // Reject steps longer than this multiple of the mesh bounding box diagonal.
  double max_length_factor = 10.0;
  int max_faces = 1000000;
};

// Straightest-geodesic walk from p along the barycentric increment dw (sum zero),
// whose embedded length is the arc length. Stops at the boundary.
TraceResult trace(const TriangleMesh& mesh, const SurfacePoint& p, const Vec3& dw,
                  const TraceOptions& opts = {});

// Same, with the step given in the local (a,b) tangent coordinates of p's face.
TraceResult trace_local(const TriangleMesh& mesh, const SurfacePoint& p, const Vec2& step,
                        const TraceOptions& opts = {});

// Jacobian of local (a,b) coordinates from the start face to the end face of a
// trace; covectors transform with its inverse transpose.
Mat2 transport_jacobian(const TriangleMesh& mesh, int from_face, int to_face, const Mat3& rotation);

}  // namespace geodiff
