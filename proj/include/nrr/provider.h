#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "nrr/io.h"
#include "nrr/rgbd_frame.h"

namespace nrr {

/// Per-query network output: probability heatmap over the target frame plus
/// scalar depth and visibility predictions.
struct HeatmapPrediction {
  ImageF heatmap;            // >= 0, finite; target frame resolution
  double depth = 0.0;        // predicted match depth, meters
  double visibility = 0.0;   // in [0, 1]
  Vec2i query_pixel = Vec2i::Zero();
};

/// Produces one prediction per query pixel. Implementations are immutable
/// after construction; predict may be called concurrently.
class CorrespondenceProvider {
 public:
  virtual ~CorrespondenceProvider() = default;

  /// Queries must lie inside the source image and have valid source depth.
  virtual std::vector<HeatmapPrediction> predict(
      const RgbdFrame& source, const RgbdFrame& target,
      const std::vector<Vec2i>& queries) const = 0;
};

/// H = H_sg (*) H_sm, the elementwise product of the per-pixel-classification
/// heatmap and the softmax heatmap. h_sm must sum to 1 within 1e-5.
ImageF compose_heatmap(const ImageF& h_sg, const ImageF& h_sm);

struct HeatmapPeak {
  Vec2i pixel = Vec2i::Zero();
  Vec3d point = Vec3d::Zero();
  bool point_valid = false;
};

/// Argmax (ties resolved to the smallest row-major index) back-projected
/// through the target depth map; point_valid is false when that depth is
/// missing.
HeatmapPeak peak_and_backproject(const HeatmapPrediction& prediction,
                                 const RgbdFrame& target);

/// Scales the heatmap so its maximum is exactly 1. Throws
/// std::invalid_argument on an all-zero map.
ImageF normalize_to_max_one(const ImageF& heatmap);

/// Ground-truth correspondence for the oracle: source pixel (with valid
/// depth) -> 3D point in target camera space, or nullopt where undefined.
using GroundTruthWarp = std::function<std::optional<Vec3d>(
    const RgbdFrame& source, const RgbdFrame& target, const Vec2i& pixel)>;

struct OracleConfig {
  double peak_sigma_px = 7.0;       // heatmap kernel width
  double noise_sigma_px = 0.0;      // Gaussian offset of the peak
  double noise_sigma_depth = 0.0;   // Gaussian depth noise, meters
  bool simulate_occlusion = true;
  double occlusion_tolerance = 0.03;  // z-buffer slack, meters
  double occluded_visibility = 0.1;
  unsigned seed = 1;
};

/// Desk-scale stand-in for the trained matching network: Gaussian heatmaps
/// centered on the ground-truth warp, z-buffer visibility, optional noise.
/// Deterministic for a fixed seed independent of call order.
class SyntheticOracleProvider final : public CorrespondenceProvider {
 public:
  SyntheticOracleProvider(GroundTruthWarp warp, OracleConfig config);

  std::vector<HeatmapPrediction> predict(
      const RgbdFrame& source, const RgbdFrame& target,
      const std::vector<Vec2i>& queries) const override;

 private:
  GroundTruthWarp warp_;
  OracleConfig config_;
};

/// Serves predictions exported to disk. The directory carries a
/// manifest.json {"pairs": {"<source>_<target>": ["q0.bin", ...]}}; heatmaps
/// are bilinearly resampled to the target frame resolution on load.
class FileBackedProvider final : public CorrespondenceProvider {
 public:
  explicit FileBackedProvider(const std::filesystem::path& directory);

  std::vector<HeatmapPrediction> predict(
      const RgbdFrame& source, const RgbdFrame& target,
      const std::vector<Vec2i>& queries) const override;

 private:
  std::filesystem::path directory_;
  std::map<std::string, std::vector<std::string>> pairs_;
};

/// Writes predictions in the file-backed layout; returns the relative file
/// names in query order (for the manifest).
std::vector<std::string> export_heatmaps(
    const std::filesystem::path& directory, const std::string& pair_id,
    const std::vector<HeatmapPrediction>& predictions, int export_width = 0,
    int export_height = 0);

/// Writes/extends manifest.json in the directory.
void write_provider_manifest(
    const std::filesystem::path& directory,
    const std::map<std::string, std::vector<std::string>>& pairs);

}  // namespace nrr
