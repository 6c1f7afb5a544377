#pragma once

#include "nrr/deformation_graph.h"
#include "nrr/rgbd_frame.h"

namespace nrr {

struct TsdfConfig {
  double voxel_size = 0.01;   // meters
  int truncation_voxels = 4;  // truncation distance = voxel_size * this
  float max_weight = 64.0f;
};

/// Canonical-space truncated signed distance volume. tsdf stores distance
/// normalized by the truncation band, clamped to [-1, 1]; weight 0 marks
/// unobserved voxels.
class TsdfVolume {
 public:
  TsdfVolume(const Vec3d& origin, double voxel_size, const Vec3i& dims,
             double truncation, float max_weight = 64.0f);

  /// Volume covering an axis-aligned box with a margin of truncation plus
  /// two voxels on each side.
  static TsdfVolume around_box(const Vec3d& lo, const Vec3d& hi,
                               const TsdfConfig& config);

  const Vec3d& origin() const { return origin_; }
  double voxel_size() const { return voxel_size_; }
  const Vec3i& dims() const { return dims_; }
  double truncation() const { return truncation_; }
  float max_weight() const { return max_weight_; }

  std::size_t voxel_count() const { return tsdf_.size(); }
  Vec3d voxel_center(int i, int j, int k) const;

  float tsdf_at(int i, int j, int k) const { return tsdf_[index(i, j, k)]; }
  float weight_at(int i, int j, int k) const {
    return weight_[index(i, j, k)];
  }

  /// Warps every voxel center into the live frame with the graph parameters
  /// and folds the projective SDF observation into the running
  /// exponential moving average. An optional mask restricts integration to
  /// the object (used for the first frame).
  void integrate(const RgbdFrame& frame, const DeformationGraph& graph,
                 const VecXd& params, const ImageU8* mask = nullptr);

  /// Convenience: identity warp.
  void integrate(const RgbdFrame& frame);

  /// Marching-cubes triangulation of the zero level set restricted to cubes
  /// whose eight corners were all observed. Returns an empty mesh when
  /// nothing was observed. Normals follow the TSDF gradient.
  SurfaceMesh extract_mesh() const;

  // Raw access for checkpoint IO.
  const std::vector<float>& tsdf_data() const { return tsdf_; }
  const std::vector<float>& weight_data() const { return weight_; }
  std::vector<float>& mutable_tsdf_data() { return tsdf_; }
  std::vector<float>& mutable_weight_data() { return weight_; }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims_.y() + j) * dims_.x() + i;
  }

  Vec3d origin_;
  double voxel_size_;
  Vec3i dims_;
  double truncation_;
  float max_weight_;
  std::vector<float> tsdf_;
  std::vector<float> weight_;
};

/// Applies the blended warp to every vertex; normals are rotated by the
/// blended rotations and renormalized.
SurfaceMesh warp_mesh(const SurfaceMesh& mesh, const DeformationGraph& graph,
                      const VecXd& params, int skin_k = 4);

}  // namespace nrr
