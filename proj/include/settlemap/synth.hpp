#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "settlemap/geojson.hpp"
#include "settlemap/raster.hpp"

namespace settlemap {

// A city-block scene: a smooth background gradient cut by a street grid, with
// rectangular settlement patches of uniform speckle covering groups of 1-2 x
// 1-2 blocks. Patches never share or touch a block.
struct SynthSpec {
  int width = 1024;
  int height = 1024;
  int patches = 6;
  double contrast = 1.0;  // speckle amplitude scale
  std::uint64_t seed = 42;
  int block_pitch = 128;  // pixels
  int road_width = 16;    // pixels
  double pixel_size = 0.5;
  double origin_x = 470000.0;
  double origin_y = 1620000.0;
  std::string crs = "EPSG:32616";
};

void validate(const SynthSpec& spec);

struct SynthScene {
  RasterImage image;
  FeatureCollection truth;   // one polygon per patch
  FeatureCollection blocks;  // one polygon per block, with block_id
  std::vector<PixelWindow> patch_windows;
};

// Throws PatchOverflow when the patches cannot be placed.
SynthScene generate_synth(const SynthSpec& spec);

}  // namespace settlemap
