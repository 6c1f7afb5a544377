#include "nrr/synthetic.h"

#include <cmath>
#include <numbers>
#include <random>

namespace nrr {

namespace {

void append_grid(SurfaceMesh& mesh, int rows, int cols, bool wrap_cols,
                 const std::function<Vec3d(int r, int c)>& position) {
  const int base = static_cast<int>(mesh.vertices.size());
  const int unique_cols = wrap_cols ? cols : cols + 1;
  for (int r = 0; r <= rows; ++r)
    for (int c = 0; c < unique_cols; ++c) {
      mesh.vertices.push_back(position(r, c));
      mesh.source_pixel.push_back({-1, -1});
    }
  auto vid = [&](int r, int c) {
    return base + r * unique_cols + (wrap_cols ? c % cols : c);
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      mesh.triangles.push_back({vid(r, c), vid(r + 1, c), vid(r, c + 1)});
      mesh.triangles.push_back({vid(r, c + 1), vid(r + 1, c), vid(r + 1, c + 1)});
    }
}

void append_disk_fan(SurfaceMesh& mesh, const Vec3d& center, double radius,
                     double y, int segments, bool flip) {
  const int base = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back({center.x(), y, center.z()});
  mesh.source_pixel.push_back({-1, -1});
  for (int s = 0; s < segments; ++s) {
    const double a = 2.0 * std::numbers::pi * s / segments;
    mesh.vertices.push_back(
        {center.x() + radius * std::cos(a), y, center.z() + radius * std::sin(a)});
    mesh.source_pixel.push_back({-1, -1});
  }
  for (int s = 0; s < segments; ++s) {
    const int a = base + 1 + s, b = base + 1 + (s + 1) % segments;
    if (flip)
      mesh.triangles.push_back({base, b, a});
    else
      mesh.triangles.push_back({base, a, b});
  }
}

SurfaceMesh make_cylinder(const Vec3d& center, double radius, double height,
                          int rings, int segments) {
  SurfaceMesh mesh;
  const double y0 = center.y() - height / 2.0;
  append_grid(mesh, rings, segments, true, [&](int r, int c) {
    const double a = 2.0 * std::numbers::pi * c / segments;
    return Vec3d(center.x() + radius * std::cos(a),
                 y0 + height * r / rings,
                 center.z() + radius * std::sin(a));
  });
  append_disk_fan(mesh, center, radius, y0, segments, false);
  append_disk_fan(mesh, center, radius, y0 + height, segments, true);
  recompute_vertex_normals(mesh);
  return mesh;
}

SurfaceMesh make_sheet(const Vec3d& center, double width, double height,
                       int nx, int ny) {
  SurfaceMesh mesh;
  append_grid(mesh, ny, nx, false, [&](int r, int c) {
    return Vec3d(center.x() - width / 2.0 + width * c / nx,
                 center.y() - height / 2.0 + height * r / ny, center.z());
  });
  recompute_vertex_normals(mesh);
  return mesh;
}

// Smooth step used to localize the articulated rotation to one segment.
inline double smooth_step(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

}  // namespace

struct SyntheticScene::Data {
  SurfaceMesh canonical;
  std::vector<Vec3f> vertex_colors;
};

SceneKind scene_kind_from_string(const std::string& name) {
  if (name == "bending-cylinder") return SceneKind::kBendingCylinder;
  if (name == "articulated-arm") return SceneKind::kArticulatedArm;
  if (name == "waving-sheet") return SceneKind::kWavingSheet;
  throw DataError("unknown scene kind: " + name +
                  " (expected bending-cylinder, articulated-arm, or "
                  "waving-sheet)");
}

std::string SyntheticScene::frame_name(int frame) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", frame);
  return buf;
}

SyntheticScene SyntheticScene::create(const SceneSpec& spec) {
  if (spec.frames < 1) throw std::invalid_argument("scene: frames must be >= 1");
  SyntheticScene scene;
  scene.spec_ = spec;
  auto data = std::make_shared<Data>();
  switch (spec.kind) {
    case SceneKind::kBendingCylinder:
      data->canonical = make_cylinder({0.0, 0.0, 1.0}, 0.12, 0.5, 60, 72);
      break;
    case SceneKind::kArticulatedArm: {
      // Two stacked segments; the upper one rotates about the joint.
      SurfaceMesh lower = make_cylinder({0.0, -0.14, 1.0}, 0.07, 0.28, 34, 48);
      SurfaceMesh upper = make_cylinder({0.0, 0.14, 1.0}, 0.07, 0.28, 34, 48);
      data->canonical = lower;
      const int base = static_cast<int>(data->canonical.vertices.size());
      for (std::size_t i = 0; i < upper.vertices.size(); ++i) {
        data->canonical.vertices.push_back(upper.vertices[i]);
        data->canonical.source_pixel.push_back({-1, -1});
      }
      for (const Vec3i& t : upper.triangles)
        data->canonical.triangles.push_back(
            {t[0] + base, t[1] + base, t[2] + base});
      recompute_vertex_normals(data->canonical);
      break;
    }
    case SceneKind::kWavingSheet:
      data->canonical = make_sheet({0.0, 0.0, 1.0}, 0.6, 0.44, 96, 72);
      break;
  }
  // Procedural texture tied to canonical coordinates so it deforms with the
  // surface; several frequencies keep the photometric gradients informative.
  data->vertex_colors.reserve(data->canonical.vertices.size());
  for (const Vec3d& p : data->canonical.vertices) {
    const double a = std::sin(55.0 * p.x()) * std::cos(47.0 * p.y());
    const double b = std::sin(31.0 * p.y() + 23.0 * p.z());
    const double g = 0.55 + 0.22 * a + 0.13 * b;
    data->vertex_colors.push_back(
        Vec3f(float(g), float(0.5 + 0.3 * a), float(0.45 + 0.25 * b)));
  }
  scene.data_ = std::move(data);
  return scene;
}

const SurfaceMesh& SyntheticScene::canonical_mesh() const {
  return data_->canonical;
}

Vec3d SyntheticScene::warp(int frame, const Vec3d& p) const {
  if (frame < 0 || frame >= spec_.frames)
    throw std::invalid_argument("scene: frame index out of range");
  const double progress =
      spec_.frames > 1 ? double(frame) / double(spec_.frames - 1) : 0.0;
  const double s = spec_.motion_scale;
  switch (spec_.kind) {
    case SceneKind::kBendingCylinder: {
      // Bend about the x axis through the cylinder base: rotation angle
      // grows linearly with height.
      const double y_base = -0.25, height = 0.5;
      const double bend = s * 0.9 * progress;
      const double f = std::clamp((p.y() - y_base) / height, 0.0, 1.5);
      const double a = bend * f;
      const Vec3d pivot(p.x(), y_base, 1.0);
      const Vec3d d = p - pivot;
      return pivot + Vec3d(d.x(), std::cos(a) * d.y() - std::sin(a) * d.z(),
                           std::sin(a) * d.y() + std::cos(a) * d.z());
    }
    case SceneKind::kArticulatedArm: {
      // Upper segment rotates about the joint at y = 0; 4 cm blend band.
      const double angle = s * 0.8 * progress;
      const double blend = smooth_step((p.y() + 0.02) / 0.04);
      const double a = angle * blend;
      const Vec3d pivot(0.0, 0.0, 1.0);
      const Vec3d d = p - pivot;
      return pivot + Vec3d(d.x(), std::cos(a) * d.y() - std::sin(a) * d.z(),
                           std::sin(a) * d.y() + std::cos(a) * d.z());
    }
    case SceneKind::kWavingSheet: {
      const double phase = s * 2.0 * std::numbers::pi * progress;
      const double k = 8.0;
      const double amp = 0.05;
      const double wave0 = std::sin(k * p.x());
      const double wave = std::sin(k * p.x() - phase);
      return p + Vec3d(0.0, 0.0, amp * (wave - wave0));
    }
  }
  return p;
}

RgbdFrame SyntheticScene::render_frame(int frame) const {
  SurfaceMesh warped = data_->canonical;
  for (Vec3d& v : warped.vertices) v = warp(frame, v);
  recompute_vertex_normals(warped);
  Rendering r = render_mesh(warped, spec_.intrinsics, &data_->vertex_colors);
  RgbdFrame out;
  out.intrinsics = spec_.intrinsics;
  out.depth = std::move(r.depth);
  out.color = std::move(r.color);
  out.mask = std::move(r.mask);
  out.frame_id = frame_name(frame);
  if (spec_.depth_noise > 0.0) {
    std::mt19937 gen(spec_.seed * 7919u + unsigned(frame));
    std::normal_distribution<double> noise(0.0, spec_.depth_noise);
    for (int v = 0; v < out.depth.height(); ++v)
      for (int u = 0; u < out.depth.width(); ++u)
        if (out.depth.at(u, v) > 0.0f)
          out.depth.at(u, v) = std::max(
              1e-3f, out.depth.at(u, v) + float(noise(gen)));
  }
  return out;
}

GroundTruthWarp SyntheticScene::ground_truth_warp() const {
  const SceneSpec spec = spec_;
  const auto scene = *this;
  return [scene](const RgbdFrame& source, const RgbdFrame& target,
                 const Vec2i& px) -> std::optional<Vec3d> {
    int src_frame = 0, tgt_frame = 0;
    try {
      src_frame = std::stoi(source.frame_id);
      tgt_frame = std::stoi(target.frame_id);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    const double d = source.depth.at(px.x(), px.y());
    if (d <= 0.0) return std::nullopt;
    const Vec3d p = backproject(px.cast<double>(), d, source.intrinsics);
    if (src_frame == tgt_frame) return p;
    if (src_frame != 0) return std::nullopt;  // reference frame only
    return scene.warp(tgt_frame, p);
  };
}

}  // namespace nrr
