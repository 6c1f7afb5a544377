#include "nrr/rgbd_frame.h"

#include <cmath>
#include <stdexcept>

namespace nrr {

void RgbdFrame::validate() const {
  if (depth.empty()) throw std::invalid_argument("frame: empty depth");
  if (!depth.same_size(intrinsics.width, intrinsics.height))
    throw std::invalid_argument("frame: depth size does not match intrinsics");
  if (has_color() && !color.same_size(depth.width(), depth.height()))
    throw std::invalid_argument("frame: color size does not match depth");
  if (mask && !mask->same_size(depth.width(), depth.height()))
    throw std::invalid_argument("frame: mask size does not match depth");
  for (int v = 0; v < depth.height(); ++v)
    for (int u = 0; u < depth.width(); ++u) {
      const float d = depth.at(u, v);
      if (!(d >= 0.0f) || !std::isfinite(d))
        throw std::invalid_argument("frame: depth must be finite and >= 0");
    }
}

Image<Vec3f> compute_vertex_map(const ImageF& depth,
                                const CameraIntrinsics& K) {
  Image<Vec3f> vm(depth.width(), depth.height(), Vec3f::Zero());
  for (int v = 0; v < depth.height(); ++v)
    for (int u = 0; u < depth.width(); ++u) {
      const double d = depth.at(u, v);
      if (d > 0.0)
        vm.at(u, v) = backproject({double(u), double(v)}, d, K).cast<float>();
    }
  return vm;
}

Image<Vec3f> compute_normal_map(const Image<Vec3f>& vertex_map) {
  const int w = vertex_map.width(), h = vertex_map.height();
  Image<Vec3f> nm(w, h, Vec3f::Zero());
  auto valid = [&](int u, int v) { return vertex_map.at(u, v).z() > 0.0f; };
  for (int v = 1; v + 1 < h; ++v)
    for (int u = 1; u + 1 < w; ++u) {
      if (!valid(u, v) || !valid(u - 1, v) || !valid(u + 1, v) ||
          !valid(u, v - 1) || !valid(u, v + 1))
        continue;
      const Vec3f du = vertex_map.at(u + 1, v) - vertex_map.at(u - 1, v);
      const Vec3f dv = vertex_map.at(u, v + 1) - vertex_map.at(u, v - 1);
      Vec3f n = du.cross(dv);
      const float len = n.norm();
      if (len < 1e-12f) continue;
      n /= len;
      if (n.z() > 0.0f) n = -n;
      nm.at(u, v) = n;
    }
  return nm;
}

}  // namespace nrr
