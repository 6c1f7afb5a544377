#pragma once

#include <vector>

#include "nrr/rgbd_frame.h"

namespace nrr {

/// Triangle mesh in camera (or canonical) space, meters. Normals are unit
/// length; source_pixel records the pixel a vertex was backprojected from
/// and is (-1, -1) for vertices that did not originate from an image.
struct SurfaceMesh {
  std::vector<Vec3d> vertices;
  std::vector<Vec3d> normals;
  std::vector<Vec3i> triangles;
  std::vector<Vec2i> source_pixel;

  bool empty() const { return vertices.empty(); }
  void validate() const;
};

/// Backprojects every valid masked pixel and connects 2x2 pixel quads with
/// two triangles each. Triangles whose 3D edges exceed
/// depth_discontinuity_threshold are dropped so silhouettes do not get
/// rubber-sheeted. Normals are area-weighted triangle normals; isolated
/// vertices default to (0,0,-1). Throws DataError when no pixel is valid.
SurfaceMesh frame_to_mesh(const RgbdFrame& frame,
                          double depth_discontinuity_threshold = 0.05);

/// Area-weighted vertex normals, camera-facing fallback for isolated
/// vertices.
void recompute_vertex_normals(SurfaceMesh& mesh);

}  // namespace nrr
