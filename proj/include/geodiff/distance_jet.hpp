#pragma once

#include <vector>

#include "geodiff/geodesic.hpp"

namespace geodiff {

struct JetOptions {
  int order = 2;         // 0 value, 1 gradient, 2 Hessian
  bool host = false;     // also differentiate with respect to host vertex positions
  double damping = 1e-12;
};

// Value and derivatives of a path length with respect to the barycentric
// weights of both endpoints (wa, wb stacked) and optionally host vertices.
struct DistanceJet {
  double value = 0.0;
  Eigen::Matrix<double, 6, 1> grad = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 6> hess = Eigen::Matrix<double, 6, 6>::Zero();
  std::vector<int> verts;  // host vertices, 3 columns each in grad_v / hess_*
  VecX grad_v;
  MatX hess_vv;
  MatX hess_wv;  // 6 x 3*verts
  // Sensitivity of the crossing positions: d t_i / dw, one row per crossing
  // (rows of merged crossings stay zero), and the residual of its linear solve.
  MatX dt_dw;
  double sensitivity_residual = 0.0;
};

// Geodesic length g. Throws GradientError when derivatives are requested for a
// zero-length path.
DistanceJet distance_jet(const TriangleMesh& mesh, const GeodesicPath& path, const Mollifier& mol,
                         const JetOptions& opts = {});
// g^2, well defined at coincident endpoints.
DistanceJet squared_distance_jet(const TriangleMesh& mesh, const GeodesicPath& path, const Mollifier& mol,
                                 const JetOptions& opts = {});

// Straight chord between two surface points (Euclidean distance springs).
GeodesicPath chord_path(const TriangleMesh& mesh, const SurfacePoint& a, const SurfacePoint& b,
                        const Mollifier& mol);

// Combine a length jet into a jet of phi(g) given phi, phi', phi''.
DistanceJet compose(const DistanceJet& g, double phi, double dphi, double ddphi);

}  // namespace geodiff
