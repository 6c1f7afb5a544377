#include "nrr/camera.h"

#include <stdexcept>

namespace nrr {

CameraIntrinsics::CameraIntrinsics(double fx_, double fy_, double cx_,
                                   double cy_, int width_, int height_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(width_), height(height_) {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw std::invalid_argument("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw std::invalid_argument("intrinsics: principal point outside image");
}

Vec2d project(const Vec3d& p, const CameraIntrinsics& K) {
  if (!(p.z() > 0.0))
    throw std::domain_error("project: point has non-positive depth");
  return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

std::optional<Vec2d> try_project(const Vec3d& p, const CameraIntrinsics& K) {
  if (!(p.z() > 0.0)) return std::nullopt;
  return Vec2d{K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

Eigen::Matrix<double, 2, 3> project_jacobian(const Vec3d& p,
                                             const CameraIntrinsics& K) {
  const double inv_z = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> J;
  J << K.fx * inv_z, 0.0, -K.fx * p.x() * inv_z * inv_z,  //
      0.0, K.fy * inv_z, -K.fy * p.y() * inv_z * inv_z;
  return J;
}

Vec3d backproject(const Vec2d& pixel, double depth, const CameraIntrinsics& K) {
  if (!(depth > 0.0))
    throw std::domain_error("backproject: non-positive depth");
  return {(pixel.x() - K.cx) * depth / K.fx, (pixel.y() - K.cy) * depth / K.fy,
          depth};
}

}  // namespace nrr
