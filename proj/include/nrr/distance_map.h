#pragma once

#include "nrr/image.h"

namespace nrr {

/// Per-pixel Euclidean distance (in pixels) to the nearest mask pixel.
/// Exactly zero inside the mask.
struct DistanceMap {
  ImageF values;
};

/// Exact Euclidean distance transform of the mask complement (two-pass
/// lower-envelope scan over squared distances). Throws DataError on an
/// all-false mask.
DistanceMap distance_map(const ImageU8& mask);

}  // namespace nrr
