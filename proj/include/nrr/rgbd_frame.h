#pragma once

#include <optional>
#include <string>

#include "nrr/camera.h"
#include "nrr/image.h"

namespace nrr {

/// Calibrated color + metric depth pair. Depth is in meters, 0 = invalid.
/// Color and depth are pre-registered and share the intrinsics.
struct RgbdFrame {
  ImageRGB color;
  ImageF depth;
  CameraIntrinsics intrinsics;
  std::optional<ImageU8> mask;  // nonzero = object
  std::string frame_id;         // dataset name, used to key file-backed lookups

  bool has_color() const { return !color.empty(); }
  bool masked(int u, int v) const {
    return !mask || mask->at(u, v) != 0;
  }
  /// Throws std::invalid_argument on inconsistent sizes or negative depth.
  void validate() const;
};

/// Backprojected 3D point per valid depth pixel; z = 0 marks invalid entries.
Image<Vec3f> compute_vertex_map(const ImageF& depth,
                                const CameraIntrinsics& K);

/// Per-pixel unit normals from central differences of the vertex map,
/// oriented toward the camera (n.z < 0). Zero vector marks invalid entries.
Image<Vec3f> compute_normal_map(const Image<Vec3f>& vertex_map);

}  // namespace nrr
