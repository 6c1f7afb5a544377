#include "nrr/mesh.h"

#include <cmath>
#include <stdexcept>

namespace nrr {

void SurfaceMesh::validate() const {
  if (normals.size() != vertices.size())
    throw std::invalid_argument("mesh: normal count != vertex count");
  const int n = static_cast<int>(vertices.size());
  for (const Vec3d& v : vertices)
    if (!v.allFinite()) throw std::invalid_argument("mesh: non-finite vertex");
  for (const Vec3d& nrm : normals)
    if (std::abs(nrm.norm() - 1.0) > 1e-6)
      throw std::invalid_argument("mesh: normal is not unit length");
  for (const Vec3i& t : triangles)
    for (int k = 0; k < 3; ++k)
      if (t[k] < 0 || t[k] >= n)
        throw std::invalid_argument("mesh: triangle index out of range");
}

void recompute_vertex_normals(SurfaceMesh& mesh) {
  mesh.normals.assign(mesh.vertices.size(), Vec3d::Zero());
  for (const Vec3i& t : mesh.triangles) {
    const Vec3d& a = mesh.vertices[t[0]];
    const Vec3d& b = mesh.vertices[t[1]];
    const Vec3d& c = mesh.vertices[t[2]];
    const Vec3d n = (b - a).cross(c - a);  // length = 2 * area
    mesh.normals[t[0]] += n;
    mesh.normals[t[1]] += n;
    mesh.normals[t[2]] += n;
  }
  for (Vec3d& n : mesh.normals) {
    const double len = n.norm();
    if (len > 1e-12)
      n /= len;
    else
      n = Vec3d(0, 0, -1);
  }
}

SurfaceMesh frame_to_mesh(const RgbdFrame& frame,
                          double depth_discontinuity_threshold) {
  const int w = frame.depth.width(), h = frame.depth.height();
  Image<int> vertex_index(w, h, -1);
  SurfaceMesh mesh;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const double d = frame.depth.at(u, v);
      if (d <= 0.0 || !frame.masked(u, v)) continue;
      vertex_index.at(u, v) = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(
          backproject({double(u), double(v)}, d, frame.intrinsics));
      mesh.source_pixel.push_back({u, v});
    }
  if (mesh.vertices.empty())
    throw DataError("frame_to_mesh: no valid masked depth pixels");

  const double thr2 =
      depth_discontinuity_threshold * depth_discontinuity_threshold;
  auto edge_ok = [&](int a, int b) {
    return (mesh.vertices[a] - mesh.vertices[b]).squaredNorm() < thr2;
  };
  auto add_triangle = [&](int a, int b, int c) {
    if (a < 0 || b < 0 || c < 0) return;
    if (edge_ok(a, b) && edge_ok(b, c) && edge_ok(c, a))
      mesh.triangles.push_back({a, b, c});
  };
  // Winding chosen so fronto-parallel surfaces get camera-facing (-z) normals.
  for (int v = 0; v + 1 < h; ++v)
    for (int u = 0; u + 1 < w; ++u) {
      const int tl = vertex_index.at(u, v), tr = vertex_index.at(u + 1, v);
      const int bl = vertex_index.at(u, v + 1),
                br = vertex_index.at(u + 1, v + 1);
      add_triangle(tl, bl, tr);
      add_triangle(tr, bl, br);
    }
  recompute_vertex_normals(mesh);
  return mesh;
}

}  // namespace nrr
