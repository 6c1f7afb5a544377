#include "nrr/losses.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nrr {

namespace {

constexpr double kLogClamp = 1e-7;
constexpr double kLambdaNll = 10.0;
constexpr double kLambdaDepth = 100.0;
constexpr double kLambdaVisibility = 1.0;

inline double clamp_prob(double p) {
  return std::clamp(p, kLogClamp, 1.0 - kLogClamp);
}

inline double bce(double p, double target) {
  p = clamp_prob(p);
  return -target * std::log(p) - (1.0 - target) * std::log(1.0 - p);
}

}  // namespace

ImageF gaussian_gt_heatmap(const Vec2i& gt_pixel, int width, int height,
                           double sigma) {
  if (gt_pixel.x() < 0 || gt_pixel.x() >= width || gt_pixel.y() < 0 ||
      gt_pixel.y() >= height)
    throw std::invalid_argument("gaussian_gt_heatmap: pixel outside image");
  ImageF map(width, height);
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) {
      const double d2 = double(u - gt_pixel.x()) * (u - gt_pixel.x()) +
                        double(v - gt_pixel.y()) * (v - gt_pixel.y());
      map.at(u, v) = static_cast<float>(std::exp(-d2 * inv_two_sigma2));
    }
  return map;
}

double heatmap_loss(const ImageF& h_sg, const ImageF& h_sm,
                    const ImageF& gt_map) {
  if (!h_sg.same_size(gt_map.width(), gt_map.height()) ||
      !h_sm.same_size(gt_map.width(), gt_map.height()))
    throw std::invalid_argument("heatmap_loss: shape mismatch");
  double bce_sum = 0.0, nll_sum = 0.0;
  for (std::size_t i = 0; i < gt_map.size(); ++i) {
    const double gt = gt_map.data()[i];
    const double weight = 1.0 + 10.0 * gt;
    bce_sum += weight * bce(h_sg.data()[i], gt);
    nll_sum += weight * (-gt * std::log(clamp_prob(h_sm.data()[i])));
  }
  return bce_sum + kLambdaNll * nll_sum;
}

double depth_loss(const ImageF& predicted_depth, double gt_depth,
                  const Vec2i& gt_pixel, double sigma) {
  const ImageF weights = gaussian_gt_heatmap(
      gt_pixel, predicted_depth.width(), predicted_depth.height(), sigma);
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted_depth.size(); ++i) {
    const double err = predicted_depth.data()[i] - gt_depth;
    sum += weights.data()[i] * err * err;
  }
  return sum;
}

double visibility_loss(double predicted, bool visible) {
  return bce(predicted, visible ? 1.0 : 0.0);
}

double total_loss(double heatmap, double depth, double visibility) {
  return heatmap + kLambdaDepth * depth + kLambdaVisibility * visibility;
}

}  // namespace nrr
