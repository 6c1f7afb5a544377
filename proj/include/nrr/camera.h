#pragma once

#include <optional>

#include "nrr/common.h"

namespace nrr {

/// Pinhole camera. Convention: right-handed, +z into the scene, pixel (0,0)
/// at the top-left, integer coordinates are pixel centers.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  CameraIntrinsics() = default;
  CameraIntrinsics(double fx_, double fy_, double cx_, double cy_, int width_,
                   int height_);
};

/// 3D camera space -> continuous 2D pixel. Throws std::domain_error if z <= 0.
Vec2d project(const Vec3d& p, const CameraIntrinsics& K);

/// Non-throwing variant used inside residual evaluation; nullopt if z <= 0.
std::optional<Vec2d> try_project(const Vec3d& p, const CameraIntrinsics& K);

/// 2x3 Jacobian of project() with respect to the 3D point. Requires z > 0.
Eigen::Matrix<double, 2, 3> project_jacobian(const Vec3d& p,
                                             const CameraIntrinsics& K);

/// Pixel + metric depth -> 3D camera-space point. Throws std::domain_error if
/// depth <= 0.
Vec3d backproject(const Vec2d& pixel, double depth, const CameraIntrinsics& K);

}  // namespace nrr
