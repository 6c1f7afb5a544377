#pragma once

#include <memory>

#include "nrr/provider.h"
#include "nrr/render.h"

namespace nrr {

enum class SceneKind { kBendingCylinder, kArticulatedArm, kWavingSheet };

SceneKind scene_kind_from_string(const std::string& name);

struct SceneSpec {
  SceneKind kind = SceneKind::kBendingCylinder;
  int frames = 30;
  CameraIntrinsics intrinsics =
      CameraIntrinsics(525.0, 525.0, 319.5, 239.5, 640, 480);
  double motion_scale = 1.0;  // multiplies the per-frame deformation
  double depth_noise = 0.0;   // additive Gaussian sigma on depth, meters
  unsigned seed = 1;
};

/// Deforming test scene with an analytic, volumetric ground-truth warp.
/// Frame 0 is the canonical pose; frame ids are zero-padded indices.
class SyntheticScene {
 public:
  static SyntheticScene create(const SceneSpec& spec);

  const SceneSpec& spec() const { return spec_; }
  const SurfaceMesh& canonical_mesh() const;

  /// Canonical-space point -> frame-f camera-space point.
  Vec3d warp(int frame, const Vec3d& p) const;

  /// Renders depth, color (procedural surface texture), and object mask.
  RgbdFrame render_frame(int frame) const;

  /// Adapter for the oracle provider; defined for queries against the
  /// canonical (frame 0) reference frame.
  GroundTruthWarp ground_truth_warp() const;

  static std::string frame_name(int frame);

 private:
  struct Data;
  SceneSpec spec_;
  std::shared_ptr<const Data> data_;
};

}  // namespace nrr
