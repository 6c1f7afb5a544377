#pragma once

#include <map>
#include <memory>
#include <vector>

#include "nrr/deformation_graph.h"
#include "nrr/distance_map.h"
#include "nrr/linear_system.h"
#include "nrr/rgbd_frame.h"

namespace nrr {

struct EnergyWeights {
  double lambda_learned = 1.0;
  double lambda_reg = 1.0;
  double lambda_point = 10.0;
  double lambda_photo = 0.001;
  double lambda_silh = 0.0001;
  double lambda_sparse = 100.0;

  void validate() const;  // all weights >= 0
};

/// Pair-alignment defaults (photo/silh/sparse/reg active).
EnergyWeights alignment_weights();

/// Sequence-reconstruction defaults (learned/reg active).
EnergyWeights reconstruction_weights();

struct SparseMatch {
  Vec3d source = Vec3d::Zero();
  Vec3d target = Vec3d::Zero();
};

/// One filtered heatmap correspondence for a graph node.
struct LearnedConstraint {
  int node_index = -1;
  ImageF heatmap;  // normalized to max 1
  Vec3d p = Vec3d::Zero();  // backprojected heatmap peak, target camera space
  bool p_valid = false;
  Vec2i peak_pixel = Vec2i::Zero();
  double visibility = 0.0;
  double predicted_depth = 0.0;
};

enum class TermKind {
  kDenseIcp = 0,
  kArap,
  kLearnedHeatmap,
  kLearnedPoint,
  kSparse,
  kSilhouette,
  kPhotometric,
};

const char* term_name(TermKind kind);

struct EvalContext {
  const DeformationGraph* graph = nullptr;
  const VecXd* x = nullptr;
  const NodeTransforms* tf = nullptr;
};

/// One residual term instance. evaluate() writes the weighted residual (and
/// optionally the weighted local Jacobian); dropped constraints write zeros
/// so the stacked dimension stays fixed within one solve.
class ResidualBlock {
 public:
  ResidualBlock(TermKind kind, int source_index, int dim, double weight,
                std::vector<int> nodes)
      : kind_(kind), source_index_(source_index), dim_(dim), weight_(weight),
        nodes_(std::move(nodes)) {}
  virtual ~ResidualBlock() = default;

  TermKind kind() const { return kind_; }
  int source_index() const { return source_index_; }
  int dim() const { return dim_; }
  double weight() const { return weight_; }
  const std::vector<int>& nodes() const { return nodes_; }

  /// r has size dim(); J, when non-null, is dim() x (6 * nodes.size()).
  /// Outputs are already multiplied by weight().
  virtual void evaluate(const EvalContext& ctx, Eigen::Ref<VecXd> r,
                        MatXd* J) const = 0;

 private:
  TermKind kind_;
  int source_index_;
  int dim_;
  double weight_;
  std::vector<int> nodes_;
};

using BlockList = std::vector<std::unique_ptr<ResidualBlock>>;

struct IcpParams {
  double max_distance = 0.1;          // meters
  double max_normal_angle_deg = 60.0;
  double point_to_point_scale = 0.1;  // point residual scale vs plane's 1.0
};

/// Projective dense ICP: per source vertex one 4-row block (1 point-to-plane
/// row + 3 point-to-point rows scaled by point_to_point_scale). Associations
/// are re-resolved at every evaluation from the current warp.
BlockList residual_dense_icp(const DeformationGraph& graph,
                             const SurfaceMesh& source,
                             const RgbdFrame& target,
                             const IcpParams& params = {}, int skin_k = 4);

/// ARAP regularizer, one 3-row block per directed edge.
BlockList residual_arap(const DeformationGraph& graph, double lambda_reg);

/// Learned heatmap + point terms for pre-filtered constraints. Takes the
/// constraints by value so the heatmaps can be moved, not copied, into the
/// blocks.
BlockList residual_learned(const DeformationGraph& graph,
                           std::vector<LearnedConstraint> constraints,
                           const CameraIntrinsics& target_K,
                           double lambda_learned, double lambda_point);

/// Visibility / depth-consistency gating of learned constraints. Keeps a
/// constraint iff visibility >= min_visibility, the target depth at the peak
/// pixel is valid, and |predicted_depth - depth| <= max_depth_difference.
std::vector<LearnedConstraint> filter_learned(
    std::vector<LearnedConstraint> constraints, const ImageF& target_depth,
    double min_visibility = 0.5, double max_depth_difference = 0.15);

BlockList residual_sparse(const DeformationGraph& graph,
                          const std::vector<SparseMatch>& matches,
                          double lambda_sparse, int skin_k = 4);

BlockList residual_silhouette(const DeformationGraph& graph,
                              const SurfaceMesh& source,
                              std::shared_ptr<const DistanceMap> target_dist,
                              const CameraIntrinsics& target_K,
                              double lambda_silh, int skin_k = 4);

BlockList residual_photometric(const DeformationGraph& graph,
                               const SurfaceMesh& source,
                               const RgbdFrame& source_frame,
                               const RgbdFrame& target_frame,
                               double lambda_photo, int skin_k = 4);

/// The stacked residual field F(G) with E_total = ||F||^2. Blocks are kept
/// in deterministic (kind, source index) order.
class EnergySpec {
 public:
  /// Merges term block lists. Throws std::invalid_argument when no block is
  /// active.
  static EnergySpec assemble(const DeformationGraph& graph,
                             std::vector<BlockList> terms);

  int param_count() const { return param_count_; }
  int residual_dim() const { return residual_dim_; }
  const std::vector<std::unique_ptr<ResidualBlock>>& blocks() const {
    return blocks_;
  }

  /// Stacked weighted residual vector F(x).
  VecXd residuals(const VecXd& x) const;

  /// E_total = ||F(x)||^2.
  double energy(const VecXd& x) const;

  /// Weighted squared-residual sum per term kind.
  std::map<TermKind, double> term_energies(const VecXd& x) const;

  /// Evaluates residuals and Jacobians at x.
  LinearSystem linearize(const VecXd& x) const;

 private:
  const DeformationGraph* graph_ = nullptr;
  std::vector<std::unique_ptr<ResidualBlock>> blocks_;
  std::vector<int> row_offsets_;
  int param_count_ = 0;
  int residual_dim_ = 0;
};

}  // namespace nrr
