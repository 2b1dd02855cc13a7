#include "settlemap/synth.hpp"

#include <algorithm>
#include <cmath>

#include "settlemap/error.hpp"
#include "settlemap/rng.hpp"

namespace settlemap {

namespace {

constexpr int kMaxPlacementAttempts = 100000;
constexpr double kSpeckleAmplitude = 96.0;
constexpr int kSpeckleCentre[3] = {140, 120, 100};

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

Feature rect_feature(const GeoTransform& t, const PixelWindow& w) {
  Feature f;
  f.geometry.parts.push_back(to_polygon(window_footprint(t, w)));
  return f;
}

}  // namespace

void validate(const SynthSpec& s) {
  if (s.width <= 0 || s.height <= 0) throw Error(ErrorCode::InvalidArgument, "synthetic raster size must be positive");
  if (s.patches < 0) throw Error(ErrorCode::InvalidArgument, "patch count must be >= 0");
  if (!(s.contrast > 0.0 && std::isfinite(s.contrast))) {
    throw Error(ErrorCode::InvalidArgument, "contrast must be positive");
  }
  if (s.block_pitch <= 0 || s.road_width < 0 || s.road_width >= s.block_pitch || s.road_width % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "block pitch must exceed an even road width");
  }
  if (!(s.pixel_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "pixel size must be positive");
}

SynthScene generate_synth(const SynthSpec& spec) {
  validate(spec);
  const GeoTransform t{spec.origin_x, spec.origin_y, spec.pixel_size, -spec.pixel_size, spec.crs};
  SynthScene scene;
  scene.image = RasterImage(spec.width, spec.height, t);
  scene.truth.crs = spec.crs;
  scene.blocks.crs = spec.crs;

  for (int r = 0; r < spec.height; ++r) {
    const double v = static_cast<double>(r) / spec.height;
    for (int c = 0; c < spec.width; ++c) {
      const double u = static_cast<double>(c) / spec.width;
      std::uint8_t* p = scene.image.px(c, r);
      p[0] = clamp_byte(90.0 + 30.0 * u + 10.0 * std::sin(3.0 * v));
      p[1] = clamp_byte(110.0 + 25.0 * v);
      p[2] = clamp_byte(80.0 + 20.0 * u * v);
    }
  }

  const int half_road = spec.road_width / 2;
  const int nbx = spec.width / spec.block_pitch;
  const int nby = spec.height / spec.block_pitch;
  for (int j = 0; j < nby; ++j) {
    for (int i = 0; i < nbx; ++i) {
      const PixelWindow w{i * spec.block_pitch + half_road, j * spec.block_pitch + half_road,
                          spec.block_pitch - spec.road_width, spec.block_pitch - spec.road_width};
      Feature f = rect_feature(t, w);
      f.properties.set("block_id", static_cast<std::int64_t>(j * nbx + i));
      scene.blocks.features.push_back(std::move(f));
    }
  }

  Rng rng(derive_seed(spec.seed, "synth"));
  std::vector<std::uint8_t> used(static_cast<std::size_t>(std::max(nbx, 0)) * std::max(nby, 0), 0);
  int attempts = 0;
  while (static_cast<int>(scene.patch_windows.size()) < spec.patches) {
    if (++attempts > kMaxPlacementAttempts || nbx < 1 || nby < 1) {
      throw Error(ErrorCode::PatchOverflow, "placed " + std::to_string(scene.patch_windows.size()) + " of " +
                                                std::to_string(spec.patches) + " patches");
    }
    const int bw = std::min(nbx, 1 + static_cast<int>(rng.below(2)));
    const int bh = std::min(nby, 1 + static_cast<int>(rng.below(2)));
    const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(nbx - bw + 1)));
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(nby - bh + 1)));
    bool clash = false;
    for (int jj = std::max(0, j - 1); jj < std::min(nby, j + bh + 1) && !clash; ++jj) {
      for (int ii = std::max(0, i - 1); ii < std::min(nbx, i + bw + 1); ++ii) {
        if (used[static_cast<std::size_t>(jj) * nbx + ii]) {
          clash = true;
          break;
        }
      }
    }
    if (clash) continue;
    for (int jj = j; jj < j + bh; ++jj) {
      for (int ii = i; ii < i + bw; ++ii) used[static_cast<std::size_t>(jj) * nbx + ii] = 1;
    }
    const PixelWindow w{i * spec.block_pitch + half_road, j * spec.block_pitch + half_road,
                        bw * spec.block_pitch - spec.road_width, bh * spec.block_pitch - spec.road_width};
    const double amp = kSpeckleAmplitude * spec.contrast;
    for (int r = w.row_off; r < w.row_off + w.height; ++r) {
      for (int c = w.col_off; c < w.col_off + w.width; ++c) {
        std::uint8_t* p = scene.image.px(c, r);
        for (int b = 0; b < 3; ++b) p[b] = clamp_byte(kSpeckleCentre[b] + (2.0 * rng.unit() - 1.0) * amp);
      }
    }
    Feature f = rect_feature(t, w);
    f.properties.set("patch_id", static_cast<std::int64_t>(scene.patch_windows.size()));
    scene.truth.features.push_back(std::move(f));
    scene.patch_windows.push_back(w);
  }
  return scene;
}

}  // namespace settlemap
