#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "settlemap/geo_core.hpp"
#include "settlemap/geojson.hpp"

namespace settlemap {

struct ScoredSquare {
  std::string tile_id;
  RectFootprint footprint;
  std::int64_t grid_i = 0;  // column on the stride grid
  std::int64_t grid_j = 0;  // row on the stride grid
  double probability = 0.0;
  friend bool operator==(const ScoredSquare&, const ScoredSquare&) = default;
};

struct DissolvedRegion {
  MultiPolygonGeom geometry;
  double mean_probability = 0.0;
  std::size_t member_count = 0;
  std::vector<std::size_t> members;  // indices into the dissolve input
};

// Lattice for dissolving squares cut with this tile geometry: one step is
// gcd(tile_size, stride) pixels.
SquareGrid square_grid(const GeoTransform& t, int tile_size, int stride);

// Survival by the 3x3 stride-grid median (absent cells count as 0) against
// p_min; survivors keep their original probability and input order.
std::vector<ScoredSquare> median_filter(std::span<const ScoredSquare> squares, double p_min = 0.5);

// Connected components under positive-area overlap or a shared edge
// segment (corner contact does not connect). Regions are ordered by their
// first member in (grid_j, grid_i) order.
std::vector<DissolvedRegion> dissolve(std::span<const ScoredSquare> squares, const SquareGrid& grid);

FeatureCollection regions_to_features(std::span<const DissolvedRegion> regions, const std::string& crs);

// Blocks touching at least one square whose sampled coverage reaches
// coverage_min, with coverage_fraction and mean_probability appended to
// their properties. `crs` is the squares' CRS.
FeatureCollection block_filter(std::span<const ScoredSquare> squares, const FeatureCollection& blocks,
                               const std::string& crs, double coverage_min = 0.5, int samples = 256);

struct PostprocessConfig {
  double p_min = 0.5;
  double coverage_min = 0.5;
  bool block_filter = false;
  int coverage_samples = 256;
};

// median_filter -> dissolve -> optional block_filter. `blocks` must be set
// when block filtering is on.
FeatureCollection run_postprocess(std::span<const ScoredSquare> squares, const SquareGrid& grid,
                                  const std::string& crs, const PostprocessConfig& cfg,
                                  const FeatureCollection* blocks = nullptr);

}  // namespace settlemap
