#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "settlemap/geo_core.hpp"
#include "settlemap/tile.hpp"

namespace settlemap {

// "none" marks unlabeled tiles cut from an image being predicted.
enum class Split { Train, Val, None };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);  // throws ParseError

struct TileRecord {
  std::string tile_id;
  PixelWindow window;
  RectFootprint footprint;
  bool label = false;
  Split split = Split::Train;
  Augmentation augmentation = Augmentation::None;
  friend bool operator==(const TileRecord&, const TileRecord&) = default;
};

struct TileManifest {
  std::string source;  // raster file name
  int raster_width = 0;
  int raster_height = 0;
  int tile_size = 0;
  int stride = 0;
  GeoTransform transform;
  std::vector<TileRecord> entries;
  friend bool operator==(const TileManifest&, const TileManifest&) = default;
};

// JSON Lines: a header object, then one object per tile with keys
// tile_id, col_off, row_off, width, height, label, split, augmentation,
// footprint.
std::string format_tile_manifest(const TileManifest& m);
TileManifest parse_tile_manifest(std::string_view text);
void write_tile_manifest(const TileManifest& m, const std::filesystem::path& path);
TileManifest load_tile_manifest(const std::filesystem::path& path);

}  // namespace settlemap
