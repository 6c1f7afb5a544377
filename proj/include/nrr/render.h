#pragma once

#include "nrr/mesh.h"

namespace nrr {

struct Rendering {
  ImageF depth;   // meters, 0 where nothing was rasterized
  ImageU8 mask;   // 255 where covered
  ImageRGB color;  // filled only when vertex colors are provided
};

/// Z-buffer rasterization of the mesh into the given camera. Depth is
/// perspective-correct (1/z interpolated in screen space); optional
/// per-vertex colors are interpolated perspective-correctly as well.
Rendering render_mesh(const SurfaceMesh& mesh, const CameraIntrinsics& K,
                      const std::vector<Vec3f>* vertex_colors = nullptr);

}  // namespace nrr
