#include "nrr/distance_map.h"

#include <cmath>
#include <limits>
#include <vector>

#include "nrr/common.h"

namespace nrr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform (lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[0]] == kInf) {
      v[0] = q;
      continue;
    }
    double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]));
    while (s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]));
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    if (f[v[0]] == kInf) {
      out[q] = kInf;
      continue;
    }
    while (z[k + 1] < q) ++k;
    const double d = q - v[k];
    out[q] = d * d + f[v[k]];
  }
}

}  // namespace

DistanceMap distance_map(const ImageU8& mask) {
  const int w = mask.width(), h = mask.height();
  bool any = false;
  std::vector<double> sq(static_cast<std::size_t>(w) * h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const bool inside = mask.at(u, v) != 0;
      any = any || inside;
      sq[static_cast<std::size_t>(v) * w + u] = inside ? 0.0 : kInf;
    }
  if (!any) throw DataError("distance_map: empty mask");

  std::vector<double> col(h), col_out(h);
  for (int u = 0; u < w; ++u) {
    for (int v = 0; v < h; ++v) col[v] = sq[static_cast<std::size_t>(v) * w + u];
    edt_1d(col, col_out);
    for (int v = 0; v < h; ++v) sq[static_cast<std::size_t>(v) * w + u] = col_out[v];
  }
  std::vector<double> row(w), row_out(w);
  DistanceMap dm{ImageF(w, h)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) row[u] = sq[static_cast<std::size_t>(v) * w + u];
    edt_1d(row, row_out);
    for (int u = 0; u < w; ++u)
      dm.values.at(u, v) = static_cast<float>(std::sqrt(row_out[u]));
  }
  return dm;
}

}  // namespace nrr
