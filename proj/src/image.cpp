#include "nrr/image.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nrr {

namespace {

// Resolves the bilinear cell for coordinate x in [0, n-1]; at the right edge
// the last cell is reused with fractional part 1.
inline void cell(double x, int n, int& i0, double& f) {
  i0 = static_cast<int>(std::floor(x));
  if (i0 >= n - 1) i0 = n - 2;
  f = x - i0;
}

}  // namespace

std::optional<BilinearSample> bilinear_sample(const ImageF& img,
                                              const Vec2d& p) {
  const int w = img.width(), h = img.height();
  if (w < 2 || h < 2) return std::nullopt;
  if (!(p.x() >= 0.0 && p.x() <= w - 1.0 && p.y() >= 0.0 && p.y() <= h - 1.0))
    return std::nullopt;
  int u0, v0;
  double fu, fv;
  cell(p.x(), w, u0, fu);
  cell(p.y(), h, v0, fv);
  const double i00 = img.at(u0, v0), i10 = img.at(u0 + 1, v0);
  const double i01 = img.at(u0, v0 + 1), i11 = img.at(u0 + 1, v0 + 1);
  BilinearSample s;
  s.value = (1.0 - fv) * ((1.0 - fu) * i00 + fu * i10) +
            fv * ((1.0 - fu) * i01 + fu * i11);
  s.grad.x() = (1.0 - fv) * (i10 - i00) + fv * (i11 - i01);
  s.grad.y() = (1.0 - fu) * (i01 - i00) + fu * (i11 - i10);
  return s;
}

BilinearSample bilinear_sample_clamped(const ImageF& img, const Vec2d& p) {
  const int w = img.width(), h = img.height();
  if (w < 2 || h < 2)
    throw std::invalid_argument("bilinear_sample_clamped: image too small");
  Vec2d q(std::clamp(p.x(), 0.0, w - 1.0), std::clamp(p.y(), 0.0, h - 1.0));
  BilinearSample s = *bilinear_sample(img, q);
  if (q.x() != p.x()) s.grad.x() = 0.0;
  if (q.y() != p.y()) s.grad.y() = 0.0;
  return s;
}

ImageF to_grayscale(const ImageRGB& rgb) {
  ImageF gray(rgb.width(), rgb.height());
  for (int v = 0; v < rgb.height(); ++v)
    for (int u = 0; u < rgb.width(); ++u) {
      const Vec3f& c = rgb.at(u, v);
      gray.at(u, v) = 0.299f * c.x() + 0.587f * c.y() + 0.114f * c.z();
    }
  return gray;
}

GradientImage image_gradient(const ImageF& img) {
  const int w = img.width(), h = img.height();
  if (w < 3 || h < 3)
    throw std::invalid_argument("image_gradient: image must be at least 3x3");
  GradientImage g{ImageF(w, h), ImageF(w, h)};
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (u == 0)
        g.du.at(u, v) = img.at(1, v) - img.at(0, v);
      else if (u == w - 1)
        g.du.at(u, v) = img.at(w - 1, v) - img.at(w - 2, v);
      else
        g.du.at(u, v) = 0.5f * (img.at(u + 1, v) - img.at(u - 1, v));
      if (v == 0)
        g.dv.at(u, v) = img.at(u, 1) - img.at(u, 0);
      else if (v == h - 1)
        g.dv.at(u, v) = img.at(u, h - 1) - img.at(u, h - 2);
      else
        g.dv.at(u, v) = 0.5f * (img.at(u, v + 1) - img.at(u, v - 1));
    }
  return g;
}

ImageF resample_bilinear(const ImageF& img, int new_width, int new_height) {
  if (img.width() < 2 || img.height() < 2)
    throw std::invalid_argument("resample_bilinear: source too small");
  if (new_width < 1 || new_height < 1)
    throw std::invalid_argument("resample_bilinear: bad target size");
  ImageF out(new_width, new_height);
  const double su = new_width > 1
                        ? double(img.width() - 1) / double(new_width - 1)
                        : 0.0;
  const double sv = new_height > 1
                        ? double(img.height() - 1) / double(new_height - 1)
                        : 0.0;
  for (int v = 0; v < new_height; ++v)
    for (int u = 0; u < new_width; ++u)
      out.at(u, v) = static_cast<float>(
          bilinear_sample(img, {u * su, v * sv})->value);
  return out;
}

}  // namespace nrr
