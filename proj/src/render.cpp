#include "nrr/render.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nrr {

Rendering render_mesh(const SurfaceMesh& mesh, const CameraIntrinsics& K,
                      const std::vector<Vec3f>* vertex_colors) {
  const int w = K.width, h = K.height;
  Rendering out;
  out.depth = ImageF(w, h, 0.0f);
  out.mask = ImageU8(w, h, 0);
  if (vertex_colors) out.color = ImageRGB(w, h, Vec3f::Zero());

  const std::size_t n = mesh.vertices.size();
  std::vector<Vec2d> screen(n);
  std::vector<double> inv_z(n);
  std::vector<bool> in_front(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3d& p = mesh.vertices[i];
    in_front[i] = p.z() > 1e-9;
    if (in_front[i]) {
      screen[i] = project(p, K);
      inv_z[i] = 1.0 / p.z();
    }
  }

  ImageF zbuf(w, h, std::numeric_limits<float>::infinity());
  for (const Vec3i& t : mesh.triangles) {
    const int a = t[0], b = t[1], c = t[2];
    if (!in_front[a] || !in_front[b] || !in_front[c]) continue;
    const Vec2d &pa = screen[a], &pb = screen[b], &pc = screen[c];
    const double area =
        (pb.x() - pa.x()) * (pc.y() - pa.y()) -
        (pb.y() - pa.y()) * (pc.x() - pa.x());
    if (std::abs(area) < 1e-12) continue;
    const double inv_area = 1.0 / area;

    const int u0 = std::max(0, int(std::ceil(std::min({pa.x(), pb.x(), pc.x()}))));
    const int u1 = std::min(w - 1, int(std::floor(std::max({pa.x(), pb.x(), pc.x()}))));
    const int v0 = std::max(0, int(std::ceil(std::min({pa.y(), pb.y(), pc.y()}))));
    const int v1 = std::min(h - 1, int(std::floor(std::max({pa.y(), pb.y(), pc.y()}))));

    for (int v = v0; v <= v1; ++v)
      for (int u = u0; u <= u1; ++u) {
        const double px = u, py = v;
        double l0 = ((pb.x() - px) * (pc.y() - py) - (pb.y() - py) * (pc.x() - px)) * inv_area;
        double l1 = ((pc.x() - px) * (pa.y() - py) - (pc.y() - py) * (pa.x() - px)) * inv_area;
        double l2 = 1.0 - l0 - l1;
        if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0) continue;
        const double izp = l0 * inv_z[a] + l1 * inv_z[b] + l2 * inv_z[c];
        if (izp <= 0.0) continue;
        const float z = static_cast<float>(1.0 / izp);
        if (z >= zbuf.at(u, v)) continue;
        zbuf.at(u, v) = z;
        out.depth.at(u, v) = z;
        out.mask.at(u, v) = 255;
        if (vertex_colors) {
          const Vec3f col =
              ((l0 * inv_z[a]) * (*vertex_colors)[a].cast<double>() +
               (l1 * inv_z[b]) * (*vertex_colors)[b].cast<double>() +
               (l2 * inv_z[c]) * (*vertex_colors)[c].cast<double>())
                  .cast<float>() *
              z;
          out.color.at(u, v) = col;
        }
      }
  }
  return out;
}

}  // namespace nrr
