#pragma once

#include <cassert>
#include <cstdint>
#include <optional>
#include <vector>

#include "nrr/common.h"

namespace nrr {

/// Row-major 2D image. at(u, v) addresses column u, row v.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  bool in_bounds(int u, int v) const {
    return u >= 0 && u < width_ && v >= 0 && v < height_;
  }

  T& at(int u, int v) {
    assert(in_bounds(u, v));
    return data_[static_cast<std::size_t>(v) * width_ + u];
  }
  const T& at(int u, int v) const {
    assert(in_bounds(u, v));
    return data_[static_cast<std::size_t>(v) * width_ + u];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool same_size(int w, int h) const { return width_ == w && height_ == h; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ImageF = Image<float>;
using ImageRGB = Image<Vec3f>;
using ImageU8 = Image<std::uint8_t>;

struct BilinearSample {
  double value = 0.0;
  Vec2d grad = Vec2d::Zero();  // d(value)/d(u,v)
};

/// Bilinear interpolation between pixel centers. Valid domain is
/// [0, W-1] x [0, H-1]; outside it returns nullopt (callers drop the
/// residual). The gradient is the in-cell derivative and agrees with finite
/// differences away from integer lattice lines.
std::optional<BilinearSample> bilinear_sample(const ImageF& img,
                                              const Vec2d& p);

/// Same, but clamps p into the valid domain first; gradient components are
/// zeroed along clamped axes.
BilinearSample bilinear_sample_clamped(const ImageF& img, const Vec2d& p);

/// Luma conversion with weights 0.299 / 0.587 / 0.114.
ImageF to_grayscale(const ImageRGB& rgb);

struct GradientImage {
  ImageF du;
  ImageF dv;
};

/// Central differences in the interior, one-sided at the borders.
/// Requires width and height >= 3.
GradientImage image_gradient(const ImageF& img);

/// Bilinear resampling onto a new grid (used for file-backed heatmaps).
ImageF resample_bilinear(const ImageF& img, int new_width, int new_height);

}  // namespace nrr
