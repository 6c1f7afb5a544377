#include "nrr/provider.h"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>

namespace nrr {

using nlohmann::json;

ImageF compose_heatmap(const ImageF& h_sg, const ImageF& h_sm) {
  if (!h_sg.same_size(h_sm.width(), h_sm.height()))
    throw std::invalid_argument("compose_heatmap: shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < h_sm.size(); ++i) sum += h_sm.data()[i];
  if (std::abs(sum - 1.0) > 1e-5)
    throw std::invalid_argument("compose_heatmap: softmax map must sum to 1");
  ImageF out(h_sg.width(), h_sg.height());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = h_sg.data()[i] * h_sm.data()[i];
  return out;
}

HeatmapPeak peak_and_backproject(const HeatmapPrediction& prediction,
                                 const RgbdFrame& target) {
  const ImageF& h = prediction.heatmap;
  if (h.empty()) throw std::invalid_argument("peak: empty heatmap");
  float best = h.data()[0];
  std::size_t best_idx = 0;
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h.data()[i] > best) {  // strict: ties keep the smaller index
      best = h.data()[i];
      best_idx = i;
    }
  HeatmapPeak peak;
  peak.pixel = Vec2i(static_cast<int>(best_idx % h.width()),
                     static_cast<int>(best_idx / h.width()));
  if (target.depth.in_bounds(peak.pixel.x(), peak.pixel.y())) {
    const double d = target.depth.at(peak.pixel.x(), peak.pixel.y());
    if (d > 0.0) {
      peak.point = backproject(peak.pixel.cast<double>(), d,
                               target.intrinsics);
      peak.point_valid = true;
    }
  }
  return peak;
}

ImageF normalize_to_max_one(const ImageF& heatmap) {
  float max_value = 0.0f;
  for (std::size_t i = 0; i < heatmap.size(); ++i)
    max_value = std::max(max_value, heatmap.data()[i]);
  if (!(max_value > 0.0f))
    throw std::invalid_argument("normalize_to_max_one: all-zero heatmap");
  ImageF out(heatmap.width(), heatmap.height());
  for (std::size_t i = 0; i < heatmap.size(); ++i)
    out.data()[i] = heatmap.data()[i] / max_value;
  return out;
}

namespace {

// Stable per-query seeding: predictions do not depend on call order.
std::uint64_t mix_seed(std::uint64_t seed, const std::string& pair_id,
                       std::size_t query_index) {
  std::uint64_t h = seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;
  for (unsigned char c : pair_id) h = (h ^ c) * 0x100000001b3ull;
  h ^= query_index + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

void validate_queries(const RgbdFrame& source,
                      const std::vector<Vec2i>& queries) {
  for (const Vec2i& q : queries) {
    if (!source.depth.in_bounds(q.x(), q.y()))
      throw std::invalid_argument("predict: query outside source image");
    if (source.depth.at(q.x(), q.y()) <= 0.0f)
      throw std::invalid_argument("predict: query pixel has no valid depth");
  }
}

}  // namespace

SyntheticOracleProvider::SyntheticOracleProvider(GroundTruthWarp warp,
                                                 OracleConfig config)
    : warp_(std::move(warp)), config_(config) {
  if (!warp_) throw std::invalid_argument("oracle: null ground-truth warp");
}

std::vector<HeatmapPrediction> SyntheticOracleProvider::predict(
    const RgbdFrame& source, const RgbdFrame& target,
    const std::vector<Vec2i>& queries) const {
  validate_queries(source, queries);
  const std::string pair_id = source.frame_id + "_" + target.frame_id;
  std::vector<HeatmapPrediction> out(queries.size());
  const int w = target.intrinsics.width, h = target.intrinsics.height;

  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    HeatmapPrediction& pred = out[qi];
    pred.query_pixel = queries[qi];
    pred.heatmap = ImageF(w, h, 0.0f);

    const auto warped = warp_(source, target, queries[qi]);
    if (!warped) {
      // Undefined ground truth: flat zero map, occluded score, bogus depth.
      pred.visibility = config_.occluded_visibility;
      pred.depth = 1.0;
      continue;
    }

    std::mt19937_64 gen(mix_seed(config_.seed, pair_id, qi));
    std::normal_distribution<double> unit(0.0, 1.0);
    Vec2d peak_px;
    double depth = warped->z();
    bool in_image = false;
    if (const auto px = try_project(*warped, target.intrinsics)) {
      peak_px = *px;
      in_image = true;
    }
    if (config_.noise_sigma_px > 0.0 && in_image) {
      peak_px.x() += config_.noise_sigma_px * unit(gen);
      peak_px.y() += config_.noise_sigma_px * unit(gen);
    }
    if (config_.noise_sigma_depth > 0.0)
      depth += config_.noise_sigma_depth * unit(gen);
    pred.depth = std::max(1e-3, depth);

    bool visible = in_image;
    if (visible && config_.simulate_occlusion) {
      const int iu = static_cast<int>(std::lround(peak_px.x()));
      const int iv = static_cast<int>(std::lround(peak_px.y()));
      if (!target.depth.in_bounds(iu, iv)) {
        visible = false;
      } else {
        const double zbuf = target.depth.at(iu, iv);
        visible = zbuf > 0.0 &&
                  warped->z() <= zbuf + config_.occlusion_tolerance;
      }
    }
    pred.visibility = visible ? 1.0 : config_.occluded_visibility;

    if (in_image) {
      // Gaussian kernel with compact 5-sigma support.
      const double sigma = config_.peak_sigma_px;
      const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
      const int r = static_cast<int>(std::ceil(5.0 * sigma));
      const int u0 = std::max(0, int(std::floor(peak_px.x())) - r);
      const int u1 = std::min(w - 1, int(std::ceil(peak_px.x())) + r);
      const int v0 = std::max(0, int(std::floor(peak_px.y())) - r);
      const int v1 = std::min(h - 1, int(std::ceil(peak_px.y())) + r);
      for (int v = v0; v <= v1; ++v)
        for (int u = u0; u <= u1; ++u) {
          const double d2 = (u - peak_px.x()) * (u - peak_px.x()) +
                            (v - peak_px.y()) * (v - peak_px.y());
          pred.heatmap.at(u, v) =
              static_cast<float>(std::exp(-d2 * inv_two_sigma2));
        }
    }
  }
  return out;
}

FileBackedProvider::FileBackedProvider(const std::filesystem::path& directory)
    : directory_(directory) {
  const auto manifest_path = directory / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in)
    throw DataError("provider manifest not found: " + manifest_path.string());
  json j;
  try {
    in >> j;
    for (const auto& [pair_id, files] : j.at("pairs").items()) {
      std::vector<std::string> names;
      for (const json& f : files) names.push_back(f.get<std::string>());
      pairs_[pair_id] = std::move(names);
    }
  } catch (const json::exception& e) {
    throw DataError("invalid provider manifest: " + std::string(e.what()));
  }
}

std::vector<HeatmapPrediction> FileBackedProvider::predict(
    const RgbdFrame& source, const RgbdFrame& target,
    const std::vector<Vec2i>& queries) const {
  validate_queries(source, queries);
  const std::string pair_id = source.frame_id + "_" + target.frame_id;
  const auto it = pairs_.find(pair_id);
  if (it == pairs_.end())
    throw DataError("provider: no predictions for pair '" + pair_id + "'");
  std::vector<HeatmapPrediction> out(queries.size());
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    if (qi >= it->second.size())
      throw DataError("provider: pair '" + pair_id + "' has no entry for query " +
                      std::to_string(qi));
    const HeatmapFile file = read_heatmap_file(directory_ / it->second[qi]);
    if (file.query_pixel != queries[qi])
      throw DataError("provider: query " + std::to_string(qi) + " of pair '" +
                      pair_id + "' was exported for a different pixel");
    HeatmapPrediction& pred = out[qi];
    pred.depth = file.depth;
    pred.visibility = file.visibility;
    pred.query_pixel = file.query_pixel;
    if (file.heatmap.same_size(target.intrinsics.width,
                               target.intrinsics.height))
      pred.heatmap = file.heatmap;
    else
      pred.heatmap = resample_bilinear(file.heatmap, target.intrinsics.width,
                                       target.intrinsics.height);
  }
  return out;
}

std::vector<std::string> export_heatmaps(
    const std::filesystem::path& directory, const std::string& pair_id,
    const std::vector<HeatmapPrediction>& predictions, int export_width,
    int export_height) {
  std::filesystem::create_directories(directory);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const HeatmapPrediction& p = predictions[i];
    HeatmapFile file;
    file.depth = static_cast<float>(p.depth);
    file.visibility = static_cast<float>(p.visibility);
    file.query_pixel = p.query_pixel;
    if (export_width > 0 && export_height > 0 &&
        !p.heatmap.same_size(export_width, export_height))
      file.heatmap = resample_bilinear(p.heatmap, export_width, export_height);
    else
      file.heatmap = p.heatmap;
    const std::string name = pair_id + "_q" + std::to_string(i) + ".ddhm";
    write_heatmap_file(directory / name, file);
    names.push_back(name);
  }
  return names;
}

void write_provider_manifest(
    const std::filesystem::path& directory,
    const std::map<std::string, std::vector<std::string>>& pairs) {
  json j;
  j["pairs"] = json::object();
  for (const auto& [pair_id, files] : pairs) j["pairs"][pair_id] = files;
  std::ofstream out(directory / "manifest.json");
  if (!out) throw DataError("cannot write provider manifest");
  out << j.dump(1) << "\n";
}

}  // namespace nrr
