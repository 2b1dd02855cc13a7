#pragma once

// Data-parallel kernels (OpenMP) and the serial reference implementations
// they are tested and benchmarked against. Every parallel kernel assembles
// its output by index, so results do not depend on the thread count.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "settlemap/classifier.hpp"
#include "settlemap/geo_core.hpp"
#include "settlemap/tile.hpp"

namespace settlemap {

struct GridValue {
  std::int64_t i = 0;  // column on the stride grid
  std::int64_t j = 0;  // row on the stride grid
  double value = 0.0;
};

using TileFetch = std::function<TilePixels(std::size_t)>;

namespace kernels {

// 0 selects the OpenMP default.
void set_thread_count(int n);
int thread_count();

// Scanline fill per row; pixels whose centre sits on or within rounding
// distance of an edge fall back to point_in_polygon.
BitMask rasterize(const MultiPolygonGeom& geoms, const GeoTransform& t, int width, int height);

// 1 where the footprint touches any truth polygon.
std::vector<std::uint8_t> label_footprints(std::span<const RectFootprint> footprints,
                                           std::span<const PolygonGeom> truth);

// Median of each cell's 3x3 neighbourhood; absent cells count as 0.
std::vector<double> median3x3(std::span<const GridValue> cells);

// Fraction of each block's samples (samples x samples over its bounding
// box, cell centres) that fall inside some square.
std::vector<double> block_coverage(std::span<const PolygonGeom> blocks, std::span<const RectFootprint> squares,
                                   int samples);

std::vector<FeatureVector> featurize_tiles(std::size_t count, const TileFetch& fetch);

}  // namespace kernels

namespace reference {

BitMask rasterize(const MultiPolygonGeom& geoms, const GeoTransform& t, int width, int height);
std::vector<std::uint8_t> label_footprints(std::span<const RectFootprint> footprints,
                                           std::span<const PolygonGeom> truth);
std::vector<double> median3x3(std::span<const GridValue> cells);
std::vector<double> block_coverage(std::span<const PolygonGeom> blocks, std::span<const RectFootprint> squares,
                                   int samples);
std::vector<FeatureVector> featurize_tiles(std::size_t count, const TileFetch& fetch);

}  // namespace reference
}  // namespace settlemap
