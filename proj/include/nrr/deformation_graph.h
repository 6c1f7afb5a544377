#pragma once

#include <array>
#include <utility>
#include <vector>

#include "nrr/mesh.h"

namespace nrr {

/// One graph node: canonical position plus a rigid transform parameterized by
/// an axis-angle rotation (Lie algebra) and a translation.
struct DeformationNode {
  Vec3d g = Vec3d::Zero();      // canonical position, meters
  Vec3d theta = Vec3d::Zero();  // axis-angle rotation, |theta| < pi
  Vec3d t = Vec3d::Zero();      // translation, meters
};

/// Sparse embedded deformation graph. Structure (positions, edges, sigma) is
/// immutable during a solve; the per-node (theta, t) parameter vector is
/// owned by the solver between evaluation passes.
struct DeformationGraph {
  std::vector<DeformationNode> nodes;
  std::vector<std::pair<int, int>> edges;  // undirected, i < j, no self-edges
  double sigma = 0.05;                     // skinning bandwidth, meters

  int node_count() const { return static_cast<int>(nodes.size()); }
  int param_count() const { return 6 * node_count(); }

  /// Flattened parameters: node i -> [theta_i, t_i] at offset 6i.
  VecXd parameters() const;
  void set_parameters(const VecXd& x);

  void validate() const;
};

/// Convex blending weights for a query point: up to k node indices with
/// non-negative weights summing to 1.
struct SkinningWeights {
  std::array<int, 4> nodes{-1, -1, -1, -1};
  std::array<double, 4> weights{0, 0, 0, 0};
  int count = 0;
};

/// Greedy Poisson-disk cover of the mesh vertices: every vertex ends up
/// within `radius` of some node and nodes are pairwise >= radius apart.
/// Throws DataError on an empty mesh.
std::vector<Vec3d> sample_nodes(const SurfaceMesh& mesh, double radius);

/// Symmetrized k-nearest-neighbor connectivity.
std::vector<std::pair<int, int>> build_edges(const std::vector<Vec3d>& nodes,
                                             int k);

/// Gaussian falloff over the k nearest nodes, renormalized to sum 1. Falls
/// back to the nearest node with weight 1 when all raw weights underflow.
SkinningWeights skinning(const DeformationGraph& graph, const Vec3d& p,
                         int k = 4);

/// Rodrigues rotation. Uses the second-order Taylor branch near theta = 0.
Mat3d rotation_exp(const Vec3d& theta);

/// d(rotation_exp)/d(theta_k) for k = 0..2 (compact closed form away from 0,
/// Taylor branch near 0).
std::array<Mat3d, 3> rotation_exp_jacobian(const Vec3d& theta);

/// Wraps theta into |theta| < pi without changing the rotation.
Vec3d renormalize_rotation(const Vec3d& theta);

/// Per-linearization cache of node rotations and their derivatives.
struct NodeTransforms {
  std::vector<Mat3d> rot;
  std::vector<std::array<Mat3d, 3>> drot;

  static NodeTransforms build(const DeformationGraph& graph, const VecXd& x,
                              bool with_derivatives);
};

/// Blended warp W_T(p) = sum_i w_i (R_i (p - g_i) + g_i + t_i).
Vec3d warp_point(const DeformationGraph& graph, const VecXd& x,
                 const SkinningWeights& w, const Vec3d& p);
Vec3d warp_point(const DeformationGraph& graph, const NodeTransforms& tf,
                 const VecXd& x, const SkinningWeights& w, const Vec3d& p);

/// Blended rotation applied to a direction, renormalized; used for normals.
Vec3d warp_direction(const NodeTransforms& tf, const SkinningWeights& w,
                     const Vec3d& n);

/// 3x6 Jacobian of W_T(p) w.r.t. node i's [theta_i, t_i] given its blend
/// weight. Columns 0..2 are rotation, 3..5 translation.
Eigen::Matrix<double, 3, 6> warp_point_jacobian_node(
    const DeformationGraph& graph, const NodeTransforms& tf, int node,
    double weight, const Vec3d& p);

}  // namespace nrr
