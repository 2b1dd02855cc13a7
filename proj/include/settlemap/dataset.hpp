#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "settlemap/geojson.hpp"
#include "settlemap/manifest.hpp"
#include "settlemap/raster.hpp"
#include "settlemap/tile.hpp"

namespace settlemap {

struct TileSpec {
  int tile_size = 128;
  int stride = 64;
};

void validate(const TileSpec& spec);

// Windows at (i*stride, j*stride) lying fully inside the raster, row-major.
// Partial edge windows are dropped.
std::vector<PixelWindow> enumerate_windows(int raster_w, int raster_h, const TileSpec& spec);

// Base tile id from the window's stride-grid position, e.g. "r0003c0012".
std::string tile_id_for(const PixelWindow& w, int stride);

// Labels every window: true iff its footprint touches any truth polygon.
// Records come back in window order with split Train.
std::vector<TileRecord> label_tiles(std::span<const PixelWindow> windows, const GeoTransform& t,
                                    const FeatureCollection& truth, int stride);

// Unlabeled records (split None) for an image being predicted.
std::vector<TileRecord> unlabeled_tiles(std::span<const PixelWindow> windows, const GeoTransform& t, int stride);

struct UndersampleConfig {
  double ratio = 4.0;
  std::uint64_t seed = 0;
};

// Keeps every positive and min(N_neg, floor(ratio * N_pos)) negatives picked
// uniformly without replacement. Survivors keep their input order.
std::vector<TileRecord> undersample_negatives(std::span<const TileRecord> records, const UndersampleConfig& cfg);

// Stratified: round(fraction * n) of each class goes to Val (round half up).
std::vector<TileRecord> split_train_val(std::span<const TileRecord> records, double val_fraction,
                                        std::uint64_t seed);

// Train records expand to none/h/v/hv variants ("_h", "_v", "_hv" id
// suffixes); other records pass through unchanged.
std::vector<TileRecord> augment(std::span<const TileRecord> records);

TilePixels extract_pixels(const RasterImage& raster, const PixelWindow& w, Augmentation a = Augmentation::None);

// One raw RGB blob per tile id under `dir`.
class TileStore {
 public:
  explicit TileStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void put(const std::string& tile_id, const TilePixels& px) const;
  TilePixels get(const TileRecord& record) const;  // throws MissingTile
  bool contains(const std::string& tile_id) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& tile_id) const { return dir_ / (tile_id + ".rgb"); }
  std::filesystem::path dir_;
};

}  // namespace settlemap
