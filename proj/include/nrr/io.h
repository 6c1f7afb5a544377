#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nrr/deformation_graph.h"
#include "nrr/energy.h"
#include "nrr/mesh.h"
#include "nrr/rgbd_frame.h"
#include "nrr/tsdf.h"

namespace nrr {

// ---- PNG ----
// Depth: 16-bit grayscale, value = millimeters, 0 = invalid.
// Color: 8-bit RGB. Mask: 8-bit grayscale, nonzero = object.

void write_depth_png(const std::filesystem::path& path, const ImageF& depth_m);
ImageF read_depth_png(const std::filesystem::path& path);

void write_color_png(const std::filesystem::path& path, const ImageRGB& color);
ImageRGB read_color_png(const std::filesystem::path& path);

void write_mask_png(const std::filesystem::path& path, const ImageU8& mask);
ImageU8 read_mask_png(const std::filesystem::path& path);

// ---- Intrinsics: one line "fx fy cx cy width height" ----
void write_intrinsics(const std::filesystem::path& path,
                      const CameraIntrinsics& K);
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);

// ---- PLY meshes (positions + normals) ----
void write_ply(const std::filesystem::path& path, const SurfaceMesh& mesh,
               bool binary = true);
SurfaceMesh read_ply(const std::filesystem::path& path);

// ---- Deformation graph JSON ----
void write_graph_json(const std::filesystem::path& path,
                      const DeformationGraph& graph);
DeformationGraph read_graph_json(const std::filesystem::path& path);

// ---- Dense match binary ----
// u32 count, then per record: u32 source_u, u32 source_v, f32 target_x/y/z
// (meters), u8 valid.
struct DenseMatch {
  Vec2i source_pixel = Vec2i::Zero();
  Vec3f target = Vec3f::Zero();
  bool valid = false;
};

void write_dense_matches(const std::filesystem::path& path,
                         const std::vector<DenseMatch>& matches);
std::vector<DenseMatch> read_dense_matches(const std::filesystem::path& path);

// ---- Heatmap prediction files ----
// Header: magic 'DDHM', u32 height, u32 width, f32 depth, f32 visibility,
// u32 query_u, u32 query_v; then height*width float32 row-major.
struct HeatmapFile {
  ImageF heatmap;
  float depth = 0.0f;
  float visibility = 0.0f;
  Vec2i query_pixel = Vec2i::Zero();
};

void write_heatmap_file(const std::filesystem::path& path,
                        const HeatmapFile& data);
HeatmapFile read_heatmap_file(const std::filesystem::path& path);

// ---- Sparse match / occlusion annotations (JSON) ----
struct AnnotatedMatch {
  Vec2i source_uv = Vec2i::Zero();
  Vec2i target_uv = Vec2i::Zero();
  Vec3d source_xyz = Vec3d::Zero();
  Vec3d target_xyz = Vec3d::Zero();
};

struct PairAnnotation {
  std::string id;
  int source_frame = 0;
  int target_frame = 0;
  std::vector<AnnotatedMatch> matches;
  std::vector<Vec2i> occlusions;  // source pixels occluded in the target
};

void write_pair_annotation(const std::filesystem::path& path,
                           const PairAnnotation& annotation);
PairAnnotation read_pair_annotation(const std::filesystem::path& path);

// ---- TSDF volume checkpoint ----
// Raw binary: f64 origin[3], f64 voxel_size, u32 dims[3], f64 truncation,
// f32 max_weight, then dims-product f32 tsdf and f32 weight arrays.
void write_volume(const std::filesystem::path& path, const TsdfVolume& volume);
TsdfVolume read_volume(const std::filesystem::path& path);

}  // namespace nrr
