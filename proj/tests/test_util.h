#pragma once

#include <random>

#include "nrr/camera.h"
#include "nrr/image.h"

namespace nrr::testutil {

inline std::mt19937& rng(unsigned seed = 0) {
  static std::mt19937 gen(12345);
  if (seed != 0) gen.seed(seed);
  return gen;
}

inline double uniform(std::mt19937& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline int uniform_int(std::mt19937& gen, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(gen);
}

inline CameraIntrinsics vga_intrinsics() {
  return CameraIntrinsics(525.0, 525.0, 319.5, 239.5, 640, 480);
}

inline ImageF random_image(std::mt19937& gen, int w, int h, float lo = 0.0f,
                           float hi = 1.0f) {
  ImageF img(w, h);
  std::uniform_real_distribution<float> dist(lo, hi);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) img.at(u, v) = dist(gen);
  return img;
}

}  // namespace nrr::testutil
