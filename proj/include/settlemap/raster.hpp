#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "settlemap/geo_core.hpp"

namespace settlemap {

// 8-bit RGB, row-major, band-interleaved.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  GeoTransform transform;

  RasterImage() = default;
  RasterImage(int w, int h, GeoTransform t)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0), transform(std::move(t)) {}

  std::uint8_t* px(int col, int row) { return &pixels[(static_cast<std::size_t>(row) * width + col) * 3]; }
  const std::uint8_t* px(int col, int row) const {
    return &pixels[(static_cast<std::size_t>(row) * width + col) * 3];
  }
};

// TIFF (8-bit RGB, chunky, uncompressed or deflate, strips or tiles,
// predictor 1 or 2) or PNG (8-bit RGB). Georeferencing comes from GeoTIFF
// tags when present, otherwise from a world-file sidecar
// (.wld, .tfw/.tifw for TIFF, .pgw/.pngw for PNG).
RasterImage load_raster(const std::filesystem::path& path);

// Parses the six world-file lines (A, D, B, E, C, F). C/F name the centre of
// the top-left pixel; the returned transform is corner-based.
GeoTransform parse_world_file(std::string_view text);

struct TiffWriteOptions {
  bool deflate = false;
  bool horizontal_predictor = false;
  int tile_size = 0;  // 0 writes strips; otherwise a multiple of 16
  int rows_per_strip = 64;
  bool georeference = true;
};

// Writes a little-endian GeoTIFF with pixel-scale, tiepoint and (for EPSG:n
// tags) a minimal GeoKey directory.
void write_geotiff(const RasterImage& image, const std::filesystem::path& path, const TiffWriteOptions& opts = {});

// Plain 8-bit RGB PNG, no georeferencing.
void write_png(const RasterImage& image, const std::filesystem::path& path);

}  // namespace settlemap
