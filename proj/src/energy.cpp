#include "nrr/energy.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nrr/parallel.h"

namespace nrr {

namespace {

std::vector<int> touched_nodes(const SkinningWeights& w) {
  std::vector<int> nodes(w.nodes.begin(), w.nodes.begin() + w.count);
  return nodes;
}

// Accumulates the warp Jacobian of point p into J's node columns.
void add_warp_jacobian(const EvalContext& ctx, const SkinningWeights& w,
                       const Vec3d& p, double row_scale,
                       const Eigen::Matrix<double, 1, 3>* left_row, MatXd& J,
                       int row) {
  for (int m = 0; m < w.count; ++m) {
    const Eigen::Matrix<double, 3, 6> Jn = warp_point_jacobian_node(
        *ctx.graph, *ctx.tf, w.nodes[m], w.weights[m], p);
    if (left_row)
      J.block<1, 6>(row, 6 * m) += row_scale * (*left_row) * Jn;
    else
      J.block<3, 6>(row, 6 * m) += row_scale * Jn;
  }
}

struct IcpTargetData {
  Image<Vec3f> vertex_map;
  Image<Vec3f> normal_map;
  CameraIntrinsics K;
};

class IcpBlock final : public ResidualBlock {
 public:
  IcpBlock(int index, Vec3d v, Vec3d n, SkinningWeights w,
           std::shared_ptr<const IcpTargetData> target, IcpParams params)
      : ResidualBlock(TermKind::kDenseIcp, index, 4, 1.0, touched_nodes(w)),
        v_(v), n_(n), w_(w), target_(std::move(target)), params_(params),
        cos_max_(std::cos(params.max_normal_angle_deg * std::numbers::pi /
                          180.0)) {}

  void evaluate(const EvalContext& ctx, Eigen::Ref<VecXd> r,
                MatXd* J) const override {
    r.setZero();
    if (J) J->setZero();
    const Vec3d vw = warp_point(*ctx.graph, *ctx.tf, *ctx.x, w_, v_);
    const auto px = try_project(vw, target_->K);
    if (!px) return;
    const int iu = static_cast<int>(std::lround(px->x()));
    const int iv = static_cast<int>(std::lround(px->y()));
    if (!target_->vertex_map.in_bounds(iu, iv)) return;
    const Vec3d q = target_->vertex_map.at(iu, iv).cast<double>();
    if (q.z() <= 0.0) return;
    const Vec3d diff = vw - q;
    if (diff.norm() > params_.max_distance) return;
    const Vec3d nq = target_->normal_map.at(iu, iv).cast<double>();
    if (nq.squaredNorm() < 0.5) return;  // invalid normal entry
    const Vec3d nw = warp_direction(*ctx.tf, w_, n_);
    if (nw.dot(nq) < cos_max_) return;

    r[0] = nq.dot(diff);
    r.segment<3>(1) = params_.point_to_point_scale * diff;
    if (J) {
      const Eigen::Matrix<double, 1, 3> nrow = nq.transpose();
      add_warp_jacobian(ctx, w_, v_, 1.0, &nrow, *J, 0);
      add_warp_jacobian(ctx, w_, v_, params_.point_to_point_scale, nullptr, *J,
                        1);
    }
  }

 private:
  Vec3d v_;
  Vec3d n_;
  SkinningWeights w_;
  std::shared_ptr<const IcpTargetData> target_;
  IcpParams params_;
  double cos_max_;
};

class ArapBlock final : public ResidualBlock {
 public:
  ArapBlock(int index, int i, int j, double weight)
      : ResidualBlock(TermKind::kArap, index, 3, weight, {i, j}) {}

  void evaluate(const EvalContext& ctx, Eigen::Ref<VecXd> r,
                MatXd* J) const override {
    const int i = nodes()[0], j = nodes()[1];
    const Vec3d& gi = ctx.graph->nodes[i].g;
    const Vec3d& gj = ctx.graph->nodes[j].g;
    const Vec3d ti = ctx.x->segment<3>(6 * i + 3);
    const Vec3d tj = ctx.x->segment<3>(6 * j + 3);
    const Vec3d d = gj - gi;
    r = weight() * (ctx.tf->rot[i] * d + gi + ti - (gj + tj));
    if (J) {
      J->setZero();
      for (int k = 0; k < 3; ++k)
        J->col(k) = weight() * (ctx.tf->drot[i][k] * d);
      J->block<3, 3>(0, 3) = weight() * Mat3d::Identity();
      J->block<3, 3>(0, 9) = -weight() * Mat3d::Identity();
    }
  }
};

class LearnedHeatmapBlock final : public ResidualBlock {
 public:
  LearnedHeatmapBlock(int index, int node, std::shared_ptr<const ImageF> h,
                      const CameraIntrinsics& K, double weight)
      : ResidualBlock(TermKind::kLearnedHeatmap, index, 1, weight, {node}),
        heatmap_(std::move(h)), K_(K) {}

  void evaluate(const EvalContext& ctx, Eigen::Ref<VecXd> r,
                MatXd* J) const override {
    if (J) J->setZero();
    const int i = nodes()[0];
    const Vec3d q = ctx.graph->nodes[i].g + ctx.x->segment<3>(6 * i + 3);
    const auto px = try_project(q, K_);
    const auto sample = px ? bilinear_sample(*heatmap_, *px) : std::nullopt;
    if (!sample) {
      // Projection left the image: the constraint saturates at residual 1
      // with zero gradient.
      r[0] = weight();
      return;
    }
    r[0] = weight() * (1.0 - sample->value);
    if (J) {
      const Eigen::Matrix<double, 1, 3> g =
          -weight() * sample->grad.transpose() * project_jacobian(q, K_);
      J->block<1, 3>(0, 3) = g;
    }
  }

 private:
  std::shared_ptr<const ImageF> heatmap_;
  CameraIntrinsics K_;
};

class LearnedPointBlock final : public ResidualBlock {
 public:
  LearnedPointBlock(int index, int node, const Vec3d& p, double weight)
      : ResidualBlock(TermKind::kLearnedPoint, index, 3, weight, {node}),
        p_(p) {}

  void evaluate(const EvalContext& ctx, Eigen::Ref<VecXd> r,
                MatXd* J) const override {
    const int i = nodes()[0];
    r = weight() *
        (ctx.graph->nodes[i].g + ctx.x->segment<3>(6 * i + 3) - p_);
    if (J) {
      J->setZero();
      J->block<3, 3>(0, 3) = weight() * Mat3d::Identity();
    }
  }

 private:
  Vec3d p_;
};

class SparseBlock final : public ResidualBlock {
 public:
  SparseBlock(int index, const SparseMatch& match, SkinningWeights w,
              double weight)
      : ResidualBlock(TermKind::kSparse, index, 3, weight, touched_nodes(w)),
        match_(match), w_(w) {}

  void evaluate(const EvalContext& ctx, Eigen::Ref<VecXd> r,
                MatXd* J) const override {
    const Vec3d sw = warp_point(*ctx.graph, *ctx.tf, *ctx.x, w_, match_.source);
    r = weight() * (sw - match_.target);
    if (J) {
      J->setZero();
      add_warp_jacobian(ctx, w_, match_.source, weight(), nullptr, *J, 0);
    }
  }

 private:
  SparseMatch match_;
  SkinningWeights w_;
};

class SilhouetteBlock final : public ResidualBlock {
 public:
  SilhouetteBlock(int index, const Vec3d& v, SkinningWeights w,
                  std::shared_ptr<const DistanceMap> dist,
                  const CameraIntrinsics& K, double weight)
      : ResidualBlock(TermKind::kSilhouette, index, 1, weight,
                      touched_nodes(w)),
        v_(v), w_(w), dist_(std::move(dist)), K_(K) {}

  void evaluate(const EvalContext& ctx, Eigen::Ref<VecXd> r,
                MatXd* J) const override {
    r.setZero();
    if (J) J->setZero();
    const Vec3d vw = warp_point(*ctx.graph, *ctx.tf, *ctx.x, w_, v_);
    const auto px = try_project(vw, K_);
    if (!px) return;
    const BilinearSample s = bilinear_sample_clamped(dist_->values, *px);
    r[0] = weight() * s.value;
    if (J) {
      const Eigen::Matrix<double, 1, 3> row =
          s.grad.transpose() * project_jacobian(vw, K_);
      add_warp_jacobian(ctx, w_, v_, weight(), &row, *J, 0);
    }
  }

 private:
  Vec3d v_;
  SkinningWeights w_;
  std::shared_ptr<const DistanceMap> dist_;
  CameraIntrinsics K_;
};

struct PhotoTargetData {
  GradientImage grad;
  CameraIntrinsics K;
};

class PhotoBlock final : public ResidualBlock {
 public:
  PhotoBlock(int index, const Vec3d& v, const Vec2d& source_grad,
             SkinningWeights w, std::shared_ptr<const PhotoTargetData> target,
             double weight)
      : ResidualBlock(TermKind::kPhotometric, index, 2, weight,
                      touched_nodes(w)),
        v_(v), source_grad_(source_grad), w_(w), target_(std::move(target)) {}

  void evaluate(const EvalContext& ctx, Eigen::Ref<VecXd> r,
                MatXd* J) const override {
    r.setZero();
    if (J) J->setZero();
    const Vec3d vw = warp_point(*ctx.graph, *ctx.tf, *ctx.x, w_, v_);
    const auto px = try_project(vw, target_->K);
    if (!px) return;
    const auto su = bilinear_sample(target_->grad.du, *px);
    const auto sv = bilinear_sample(target_->grad.dv, *px);
    if (!su || !sv) return;
    r[0] = weight() * (su->value - source_grad_.x());
    r[1] = weight() * (sv->value - source_grad_.y());
    if (J) {
      const Eigen::Matrix<double, 2, 3> P = project_jacobian(vw, target_->K);
      const Eigen::Matrix<double, 1, 3> row_u = su->grad.transpose() * P;
      const Eigen::Matrix<double, 1, 3> row_v = sv->grad.transpose() * P;
      add_warp_jacobian(ctx, w_, v_, weight(), &row_u, *J, 0);
      add_warp_jacobian(ctx, w_, v_, weight(), &row_v, *J, 1);
    }
  }

 private:
  Vec3d v_;
  Vec2d source_grad_;
  SkinningWeights w_;
  std::shared_ptr<const PhotoTargetData> target_;
};

}  // namespace

void EnergyWeights::validate() const {
  for (double w : {lambda_learned, lambda_reg, lambda_point, lambda_photo,
                   lambda_silh, lambda_sparse})
    if (!(w >= 0.0))
      throw std::invalid_argument("energy weights must be non-negative");
}

EnergyWeights alignment_weights() {
  EnergyWeights w;
  w.lambda_learned = 0.0;
  w.lambda_photo = 0.001;
  w.lambda_silh = 0.0001;
  w.lambda_sparse = 100.0;
  w.lambda_reg = 10.0;
  return w;
}

EnergyWeights reconstruction_weights() {
  EnergyWeights w;
  w.lambda_learned = 1.0;
  w.lambda_reg = 1.0;
  w.lambda_point = 10.0;
  w.lambda_photo = 0.0;
  w.lambda_silh = 0.0;
  w.lambda_sparse = 0.0;
  return w;
}

const char* term_name(TermKind kind) {
  switch (kind) {
    case TermKind::kDenseIcp: return "dense_icp";
    case TermKind::kArap: return "arap";
    case TermKind::kLearnedHeatmap: return "learned_heatmap";
    case TermKind::kLearnedPoint: return "learned_point";
    case TermKind::kSparse: return "sparse";
    case TermKind::kSilhouette: return "silhouette";
    case TermKind::kPhotometric: return "photometric";
  }
  return "unknown";
}

BlockList residual_dense_icp(const DeformationGraph& graph,
                             const SurfaceMesh& source,
                             const RgbdFrame& target, const IcpParams& params,
                             int skin_k) {
  auto data = std::make_shared<IcpTargetData>();
  data->vertex_map = compute_vertex_map(target.depth, target.intrinsics);
  data->normal_map = compute_normal_map(data->vertex_map);
  data->K = target.intrinsics;

  BlockList blocks(source.vertices.size());
  parallel_for(source.vertices.size(), [&](std::size_t i) {
    const SkinningWeights w = skinning(graph, source.vertices[i], skin_k);
    blocks[i] = std::make_unique<IcpBlock>(static_cast<int>(i),
                                           source.vertices[i],
                                           source.normals[i], w, data, params);
  });
  return blocks;
}

BlockList residual_arap(const DeformationGraph& graph, double lambda_reg) {
  BlockList blocks;
  if (lambda_reg == 0.0) return blocks;
  const double weight = std::sqrt(lambda_reg);
  int index = 0;
  for (auto [i, j] : graph.edges) {
    blocks.push_back(std::make_unique<ArapBlock>(index++, i, j, weight));
    blocks.push_back(std::make_unique<ArapBlock>(index++, j, i, weight));
  }
  return blocks;
}

BlockList residual_learned(const DeformationGraph& graph,
                           std::vector<LearnedConstraint> constraints,
                           const CameraIntrinsics& target_K,
                           double lambda_learned, double lambda_point) {
  BlockList blocks;
  if (lambda_learned == 0.0) return blocks;
  const double w_heat = std::sqrt(lambda_learned);
  const double w_point = std::sqrt(lambda_learned * lambda_point);
  int index = 0;
  for (LearnedConstraint& c : constraints) {
    if (c.node_index < 0 || c.node_index >= graph.node_count())
      throw std::invalid_argument("residual_learned: bad node index");
    auto heatmap = std::make_shared<ImageF>(std::move(c.heatmap));
    blocks.push_back(std::make_unique<LearnedHeatmapBlock>(
        index, c.node_index, heatmap, target_K, w_heat));
    if (c.p_valid && lambda_point > 0.0)
      blocks.push_back(std::make_unique<LearnedPointBlock>(
          index, c.node_index, c.p, w_point));
    ++index;
  }
  return blocks;
}

std::vector<LearnedConstraint> filter_learned(
    std::vector<LearnedConstraint> constraints, const ImageF& target_depth,
    double min_visibility, double max_depth_difference) {
  std::vector<LearnedConstraint> kept;
  kept.reserve(constraints.size());
  for (LearnedConstraint& c : constraints) {
    if (c.visibility < min_visibility) continue;
    if (!target_depth.in_bounds(c.peak_pixel.x(), c.peak_pixel.y())) continue;
    const double d = target_depth.at(c.peak_pixel.x(), c.peak_pixel.y());
    if (d <= 0.0) continue;
    if (std::abs(c.predicted_depth - d) > max_depth_difference) continue;
    kept.push_back(std::move(c));
  }
  return kept;
}

BlockList residual_sparse(const DeformationGraph& graph,
                          const std::vector<SparseMatch>& matches,
                          double lambda_sparse, int skin_k) {
  BlockList blocks;
  if (lambda_sparse == 0.0) return blocks;
  const double weight = std::sqrt(lambda_sparse);
  int index = 0;
  for (const SparseMatch& m : matches) {
    if (!m.source.allFinite() || !m.target.allFinite())
      throw std::invalid_argument("residual_sparse: non-finite match");
    const SkinningWeights w = skinning(graph, m.source, skin_k);
    blocks.push_back(std::make_unique<SparseBlock>(index++, m, w, weight));
  }
  return blocks;
}

BlockList residual_silhouette(const DeformationGraph& graph,
                              const SurfaceMesh& source,
                              std::shared_ptr<const DistanceMap> target_dist,
                              const CameraIntrinsics& target_K,
                              double lambda_silh, int skin_k) {
  BlockList blocks;
  if (lambda_silh == 0.0 || source.empty()) return blocks;
  const double weight = std::sqrt(lambda_silh);
  blocks.resize(source.vertices.size());
  parallel_for(source.vertices.size(), [&](std::size_t i) {
    const SkinningWeights w = skinning(graph, source.vertices[i], skin_k);
    blocks[i] = std::make_unique<SilhouetteBlock>(
        static_cast<int>(i), source.vertices[i], w, target_dist, target_K,
        weight);
  });
  return blocks;
}

BlockList residual_photometric(const DeformationGraph& graph,
                               const SurfaceMesh& source,
                               const RgbdFrame& source_frame,
                               const RgbdFrame& target_frame,
                               double lambda_photo, int skin_k) {
  BlockList blocks;
  if (lambda_photo == 0.0) return blocks;
  if (!source_frame.has_color() || !target_frame.has_color())
    throw std::invalid_argument("residual_photometric: frames need color");
  const double weight = std::sqrt(lambda_photo);

  const GradientImage source_grad =
      image_gradient(to_grayscale(source_frame.color));
  auto target = std::make_shared<PhotoTargetData>();
  target->grad = image_gradient(to_grayscale(target_frame.color));
  target->K = target_frame.intrinsics;

  blocks.resize(source.vertices.size());
  parallel_for(source.vertices.size(), [&](std::size_t i) {
    const Vec3d& v = source.vertices[i];
    const auto px = try_project(v, source_frame.intrinsics);
    Vec2d sgrad = Vec2d::Zero();
    bool ok = false;
    if (px) {
      const auto su = bilinear_sample(source_grad.du, *px);
      const auto sv = bilinear_sample(source_grad.dv, *px);
      if (su && sv) {
        sgrad = {su->value, sv->value};
        ok = true;
      }
    }
    if (!ok) return;  // source sample out of bounds: vertex contributes no block
    const SkinningWeights w = skinning(graph, v, skin_k);
    blocks[i] = std::make_unique<PhotoBlock>(static_cast<int>(i), v, sgrad, w,
                                             target, weight);
  });
  std::erase_if(blocks, [](const auto& b) { return b == nullptr; });
  return blocks;
}

EnergySpec EnergySpec::assemble(const DeformationGraph& graph,
                                std::vector<BlockList> terms) {
  EnergySpec spec;
  spec.graph_ = &graph;
  spec.param_count_ = graph.param_count();
  for (BlockList& list : terms)
    for (auto& b : list) {
      if (b->weight() == 0.0) continue;
      for (int node : b->nodes())
        if (node < 0 || node >= graph.node_count())
          throw std::invalid_argument("assemble: block touches invalid node");
      spec.blocks_.push_back(std::move(b));
    }
  if (spec.blocks_.empty())
    throw std::invalid_argument("assemble: no active residual terms");
  std::stable_sort(spec.blocks_.begin(), spec.blocks_.end(),
                   [](const auto& a, const auto& b) {
                     if (a->kind() != b->kind()) return a->kind() < b->kind();
                     return a->source_index() < b->source_index();
                   });
  spec.row_offsets_.resize(spec.blocks_.size());
  int rows = 0;
  for (std::size_t i = 0; i < spec.blocks_.size(); ++i) {
    spec.row_offsets_[i] = rows;
    rows += spec.blocks_[i]->dim();
  }
  spec.residual_dim_ = rows;
  return spec;
}

VecXd EnergySpec::residuals(const VecXd& x) const {
  if (x.size() != param_count_)
    throw std::invalid_argument("residuals: parameter size mismatch");
  const NodeTransforms tf = NodeTransforms::build(*graph_, x, false);
  const EvalContext ctx{graph_, &x, &tf};
  VecXd F(residual_dim_);
  parallel_for(blocks_.size(), [&](std::size_t i) {
    blocks_[i]->evaluate(ctx, F.segment(row_offsets_[i], blocks_[i]->dim()),
                         nullptr);
  });
  return F;
}

double EnergySpec::energy(const VecXd& x) const {
  return residuals(x).squaredNorm();
}

std::map<TermKind, double> EnergySpec::term_energies(const VecXd& x) const {
  const VecXd F = residuals(x);
  std::map<TermKind, double> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    out[blocks_[i]->kind()] +=
        F.segment(row_offsets_[i], blocks_[i]->dim()).squaredNorm();
  return out;
}

LinearSystem EnergySpec::linearize(const VecXd& x) const {
  if (x.size() != param_count_)
    throw std::invalid_argument("linearize: parameter size mismatch");
  const NodeTransforms tf = NodeTransforms::build(*graph_, x, true);
  const EvalContext ctx{graph_, &x, &tf};
  LinearSystem system(param_count_, residual_dim_);
  system.blocks.resize(blocks_.size());
  parallel_for(blocks_.size(), [&](std::size_t i) {
    const ResidualBlock& b = *blocks_[i];
    EvaluatedBlock& eb = system.blocks[i];
    eb.row = row_offsets_[i];
    eb.dim = b.dim();
    eb.nodes = b.nodes();
    eb.J.setZero(b.dim(), 6 * static_cast<int>(b.nodes().size()));
    b.evaluate(ctx, system.F.segment(eb.row, eb.dim), &eb.J);
  });
  return system;
}

}  // namespace nrr
