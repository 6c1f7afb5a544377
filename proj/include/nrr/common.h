#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>
#include <string>

namespace nrr {

using Vec2d = Eigen::Vector2d;
using Vec3d = Eigen::Vector3d;
using Vec2f = Eigen::Vector2f;
using Vec3f = Eigen::Vector3f;
using Vec2i = Eigen::Vector2i;
using Vec3i = Eigen::Vector3i;
using Mat3d = Eigen::Matrix3d;
using VecXd = Eigen::VectorXd;
using MatXd = Eigen::MatrixXd;

/// Malformed files, missing paths, inconsistent dataset entries.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite energies or unrecoverable solver failures.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nrr
