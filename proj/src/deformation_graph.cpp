#include "nrr/deformation_graph.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace nrr {

namespace {

inline Mat3d skew(const Vec3d& v) {
  Mat3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

constexpr double kTaylorAngle = 1e-4;

}  // namespace

VecXd DeformationGraph::parameters() const {
  VecXd x(param_count());
  for (int i = 0; i < node_count(); ++i) {
    x.segment<3>(6 * i) = nodes[i].theta;
    x.segment<3>(6 * i + 3) = nodes[i].t;
  }
  return x;
}

void DeformationGraph::set_parameters(const VecXd& x) {
  if (x.size() != param_count())
    throw std::invalid_argument("graph: parameter vector has wrong size");
  for (int i = 0; i < node_count(); ++i) {
    nodes[i].theta = x.segment<3>(6 * i);
    nodes[i].t = x.segment<3>(6 * i + 3);
  }
}

void DeformationGraph::validate() const {
  const int k = node_count();
  std::vector<int> degree(k, 0);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= k || j >= k)
      throw std::invalid_argument("graph: edge index out of range");
    if (i == j) throw std::invalid_argument("graph: self-edge");
    ++degree[i];
    ++degree[j];
  }
  if (k >= 2)
    for (int i = 0; i < k; ++i)
      if (degree[i] == 0)
        throw std::invalid_argument("graph: isolated node");
  for (const DeformationNode& n : nodes)
    if (!n.g.allFinite() || !n.theta.allFinite() || !n.t.allFinite())
      throw std::invalid_argument("graph: non-finite node");
}

std::vector<Vec3d> sample_nodes(const SurfaceMesh& mesh, double radius) {
  if (mesh.empty()) throw DataError("sample_nodes: empty mesh");
  if (!(radius > 0.0))
    throw std::invalid_argument("sample_nodes: radius must be positive");
  std::vector<Vec3d> nodes;
  const double r2 = radius * radius;
  for (const Vec3d& v : mesh.vertices) {
    bool covered = false;
    for (const Vec3d& n : nodes)
      if ((v - n).squaredNorm() < r2) {
        covered = true;
        break;
      }
    if (!covered) nodes.push_back(v);
  }
  return nodes;
}

std::vector<std::pair<int, int>> build_edges(const std::vector<Vec3d>& nodes,
                                             int k) {
  const int n = static_cast<int>(nodes.size());
  if (n < 2) throw std::invalid_argument("build_edges: need at least 2 nodes");
  if (k < 1) throw std::invalid_argument("build_edges: k must be >= 1");
  std::set<std::pair<int, int>> edges;
  std::vector<std::pair<double, int>> dist;
  dist.reserve(n);
  for (int i = 0; i < n; ++i) {
    dist.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) dist.emplace_back((nodes[i] - nodes[j]).squaredNorm(), j);
    const int take = std::min<int>(k, static_cast<int>(dist.size()));
    std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
    for (int m = 0; m < take; ++m) {
      const int j = dist[m].second;
      edges.insert({std::min(i, j), std::max(i, j)});
    }
  }
  return {edges.begin(), edges.end()};
}

SkinningWeights skinning(const DeformationGraph& graph, const Vec3d& p,
                         int k) {
  const int n = graph.node_count();
  if (n < 1) throw std::invalid_argument("skinning: empty graph");
  k = std::min(k, std::min(n, 4));
  // Stable (distance, index) order keeps ties deterministic.
  std::vector<std::pair<double, int>> dist;
  dist.reserve(n);
  for (int i = 0; i < n; ++i)
    dist.emplace_back((p - graph.nodes[i].g).squaredNorm(), i);
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  SkinningWeights w;
  const double inv_two_sigma2 = 1.0 / (2.0 * graph.sigma * graph.sigma);
  double sum = 0.0;
  for (int m = 0; m < k; ++m) {
    w.nodes[m] = dist[m].second;
    w.weights[m] = std::exp(-dist[m].first * inv_two_sigma2);
    sum += w.weights[m];
  }
  w.count = k;
  if (sum <= 0.0) {
    // All weights underflowed: nearest node carries the point.
    w.count = 1;
    w.nodes[0] = dist[0].second;
    w.weights[0] = 1.0;
    return w;
  }
  for (int m = 0; m < k; ++m) w.weights[m] /= sum;
  return w;
}

Mat3d rotation_exp(const Vec3d& theta) {
  const double angle2 = theta.squaredNorm();
  const Mat3d S = skew(theta);
  if (angle2 < kTaylorAngle * kTaylorAngle)
    return Mat3d::Identity() + S + 0.5 * (S * S);
  const double angle = std::sqrt(angle2);
  const double a = std::sin(angle) / angle;
  const double b = (1.0 - std::cos(angle)) / angle2;
  return Mat3d::Identity() + a * S + b * (S * S);
}

std::array<Mat3d, 3> rotation_exp_jacobian(const Vec3d& theta) {
  std::array<Mat3d, 3> d;
  const double angle2 = theta.squaredNorm();
  if (angle2 < kTaylorAngle * kTaylorAngle) {
    const Mat3d S = skew(theta);
    for (int k = 0; k < 3; ++k) {
      const Mat3d E = skew(Vec3d::Unit(k));
      d[k] = E + 0.5 * (E * S + S * E);
    }
    return d;
  }
  // Compact closed form: dR/dtheta_k =
  //   (theta_k [theta]x + [theta x ((I - R) e_k)]x) / |theta|^2 * R.
  const Mat3d R = rotation_exp(theta);
  const Mat3d S = skew(theta);
  const Mat3d ImR = Mat3d::Identity() - R;
  for (int k = 0; k < 3; ++k) {
    const Vec3d v = theta.cross(ImR.col(k));
    d[k] = ((theta[k] * S + skew(v)) / angle2) * R;
  }
  return d;
}

Vec3d renormalize_rotation(const Vec3d& theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double angle = theta.norm();
  if (angle < std::numbers::pi) return theta;
  const Vec3d axis = theta / angle;
  angle = std::fmod(angle, two_pi);
  if (angle >= std::numbers::pi) angle -= two_pi;  // now in [-pi, pi)
  return axis * angle;
}

NodeTransforms NodeTransforms::build(const DeformationGraph& graph,
                                     const VecXd& x, bool with_derivatives) {
  const int n = graph.node_count();
  NodeTransforms tf;
  tf.rot.resize(n);
  if (with_derivatives) tf.drot.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec3d theta = x.segment<3>(6 * i);
    tf.rot[i] = rotation_exp(theta);
    if (with_derivatives) tf.drot[i] = rotation_exp_jacobian(theta);
  }
  return tf;
}

Vec3d warp_point(const DeformationGraph& graph, const NodeTransforms& tf,
                 const VecXd& x, const SkinningWeights& w, const Vec3d& p) {
  Vec3d out = Vec3d::Zero();
  for (int m = 0; m < w.count; ++m) {
    const int i = w.nodes[m];
    const Vec3d& g = graph.nodes[i].g;
    const Vec3d t = x.segment<3>(6 * i + 3);
    out += w.weights[m] * (tf.rot[i] * (p - g) + g + t);
  }
  return out;
}

Vec3d warp_point(const DeformationGraph& graph, const VecXd& x,
                 const SkinningWeights& w, const Vec3d& p) {
  Vec3d out = Vec3d::Zero();
  for (int m = 0; m < w.count; ++m) {
    const int i = w.nodes[m];
    const Vec3d& g = graph.nodes[i].g;
    const Vec3d theta = x.segment<3>(6 * i);
    const Vec3d t = x.segment<3>(6 * i + 3);
    out += w.weights[m] * (rotation_exp(theta) * (p - g) + g + t);
  }
  return out;
}

Vec3d warp_direction(const NodeTransforms& tf, const SkinningWeights& w,
                     const Vec3d& n) {
  Vec3d out = Vec3d::Zero();
  for (int m = 0; m < w.count; ++m)
    out += w.weights[m] * (tf.rot[w.nodes[m]] * n);
  const double len = out.norm();
  return len > 1e-12 ? Vec3d(out / len) : n;
}

Eigen::Matrix<double, 3, 6> warp_point_jacobian_node(
    const DeformationGraph& graph, const NodeTransforms& tf, int node,
    double weight, const Vec3d& p) {
  Eigen::Matrix<double, 3, 6> J;
  const Vec3d d = p - graph.nodes[node].g;
  for (int k = 0; k < 3; ++k) J.col(k) = weight * (tf.drot[node][k] * d);
  J.block<3, 3>(0, 3) = weight * Mat3d::Identity();
  return J;
}

}  // namespace nrr
