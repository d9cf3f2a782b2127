#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace geodiff {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Errors carry a category so the CLI can map them to exit codes.
struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GeodesicError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GradientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EnergyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GvdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace geodiff
