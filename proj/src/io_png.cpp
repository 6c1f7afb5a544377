#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "nrr/io.h"

namespace nrr {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

void read_png(const std::filesystem::path& path, int expected_bit_depth,
              int expected_color_type, int& width, int& height,
              std::vector<std::vector<png_byte>>& rows) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("cannot open PNG: " + path.string());
  PngReader ctx;
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                   nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info)
    throw DataError("libpng init failed: " + path.string());
  if (setjmp(png_jmpbuf(ctx.png)))
    throw DataError("malformed PNG: " + path.string());
  png_init_io(ctx.png, file.get());
  png_read_info(ctx.png, ctx.info);

  width = png_get_image_width(ctx.png, ctx.info);
  height = png_get_image_height(ctx.png, ctx.info);
  int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
  int color_type = png_get_color_type(ctx.png, ctx.info);

  // Normalize palettes / strip alpha so callers see exactly gray8, gray16,
  // or rgb8.
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
  if (expected_bit_depth == 8 && bit_depth == 16) png_set_strip_16(ctx.png);
  if (expected_color_type == PNG_COLOR_TYPE_GRAY &&
      (color_type == PNG_COLOR_TYPE_RGB ||
       color_type == PNG_COLOR_TYPE_PALETTE ||
       color_type == PNG_COLOR_TYPE_RGB_ALPHA))
    png_set_rgb_to_gray_fixed(ctx.png, 1, -1, -1);
  if (expected_color_type == PNG_COLOR_TYPE_RGB &&
      (color_type == PNG_COLOR_TYPE_GRAY ||
       color_type == PNG_COLOR_TYPE_GRAY_ALPHA))
    png_set_gray_to_rgb(ctx.png);
  if (expected_bit_depth == 16) png_set_swap(ctx.png);  // PNG is big-endian
  png_read_update_info(ctx.png, ctx.info);

  if (int(png_get_bit_depth(ctx.png, ctx.info)) != expected_bit_depth)
    throw DataError("unexpected PNG bit depth: " + path.string());

  rows.assign(height, std::vector<png_byte>(
                          png_get_rowbytes(ctx.png, ctx.info)));
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) row_ptrs[y] = rows[y].data();
  png_read_image(ctx.png, row_ptrs.data());
  png_read_end(ctx.png, nullptr);
}

void write_png(const std::filesystem::path& path, int width, int height,
               int bit_depth, int color_type,
               std::vector<std::vector<png_byte>>& rows) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot write PNG: " + path.string());
  PngWriter ctx;
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                    nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info)
    throw DataError("libpng init failed: " + path.string());
  if (setjmp(png_jmpbuf(ctx.png)))
    throw DataError("PNG write failed: " + path.string());
  png_init_io(ctx.png, file.get());
  png_set_IHDR(ctx.png, ctx.info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  if (bit_depth == 16) png_set_swap(ctx.png);
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) row_ptrs[y] = rows[y].data();
  png_write_image(ctx.png, row_ptrs.data());
  png_write_end(ctx.png, nullptr);
}

}  // namespace

void write_depth_png(const std::filesystem::path& path,
                     const ImageF& depth_m) {
  const int w = depth_m.width(), h = depth_m.height();
  std::vector<std::vector<png_byte>> rows(
      h, std::vector<png_byte>(std::size_t(w) * 2));
  for (int v = 0; v < h; ++v) {
    auto* row16 = reinterpret_cast<std::uint16_t*>(rows[v].data());
    for (int u = 0; u < w; ++u) {
      const double mm = std::round(double(depth_m.at(u, v)) * 1000.0);
      row16[u] = static_cast<std::uint16_t>(
          std::clamp(mm, 0.0, 65535.0));
    }
  }
  write_png(path, w, h, 16, PNG_COLOR_TYPE_GRAY, rows);
}

ImageF read_depth_png(const std::filesystem::path& path) {
  int w = 0, h = 0;
  std::vector<std::vector<png_byte>> rows;
  read_png(path, 16, PNG_COLOR_TYPE_GRAY, w, h, rows);
  ImageF depth(w, h);
  for (int v = 0; v < h; ++v) {
    const auto* row16 = reinterpret_cast<const std::uint16_t*>(rows[v].data());
    for (int u = 0; u < w; ++u)
      depth.at(u, v) = float(row16[u]) / 1000.0f;
  }
  return depth;
}

void write_color_png(const std::filesystem::path& path,
                     const ImageRGB& color) {
  const int w = color.width(), h = color.height();
  std::vector<std::vector<png_byte>> rows(
      h, std::vector<png_byte>(std::size_t(w) * 3));
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const Vec3f& c = color.at(u, v);
      for (int ch = 0; ch < 3; ++ch)
        rows[v][3 * u + ch] = static_cast<png_byte>(
            std::clamp(std::lround(c[ch] * 255.0f), 0l, 255l));
    }
  write_png(path, w, h, 8, PNG_COLOR_TYPE_RGB, rows);
}

ImageRGB read_color_png(const std::filesystem::path& path) {
  int w = 0, h = 0;
  std::vector<std::vector<png_byte>> rows;
  read_png(path, 8, PNG_COLOR_TYPE_RGB, w, h, rows);
  ImageRGB color(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      color.at(u, v) = Vec3f(rows[v][3 * u], rows[v][3 * u + 1],
                             rows[v][3 * u + 2]) /
                       255.0f;
  return color;
}

void write_mask_png(const std::filesystem::path& path, const ImageU8& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<std::vector<png_byte>> rows(h, std::vector<png_byte>(w));
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) rows[v][u] = mask.at(u, v);
  write_png(path, w, h, 8, PNG_COLOR_TYPE_GRAY, rows);
}

ImageU8 read_mask_png(const std::filesystem::path& path) {
  int w = 0, h = 0;
  std::vector<std::vector<png_byte>> rows;
  read_png(path, 8, PNG_COLOR_TYPE_GRAY, w, h, rows);
  ImageU8 mask(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) mask.at(u, v) = rows[v][u];
  return mask;
}

}  // namespace nrr
