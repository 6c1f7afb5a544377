#pragma once

#include "nrr/image.h"

namespace nrr {

/// Gaussian target heatmap: value 1 at the ground-truth pixel, decaying with
/// standard deviation sigma (7 px by default). Throws std::invalid_argument
/// if the pixel is outside the image.
ImageF gaussian_gt_heatmap(const Vec2i& gt_pixel, int width, int height,
                           double sigma = 7.0);

/// Weighted BCE on the sigmoid heatmap plus weighted soft-target cross
/// entropy on the softmax heatmap. Pixel weight is 1 + 10 * G(x); the NLL
/// sum carries lambda_nll = 10. Probabilities are clamped to
/// [1e-7, 1 - 1e-7] before the logs.
double heatmap_loss(const ImageF& h_sg, const ImageF& h_sm,
                    const ImageF& gt_map);

/// Weighted MSE of a dense constant-depth prediction against the matched
/// point's depth; pixel weight is G(x) (1 at the ground-truth pixel).
double depth_loss(const ImageF& predicted_depth, double gt_depth,
                  const Vec2i& gt_pixel, double sigma = 7.0);

/// Binary cross entropy between the predicted visibility score and the 0/1
/// label.
double visibility_loss(double predicted, bool visible);

/// L = L_H + 100 * L_D + 1 * L_V.
double total_loss(double heatmap, double depth, double visibility);

}  // namespace nrr
