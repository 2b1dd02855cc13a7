#include "settlemap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "io_util.hpp"
#include "settlemap/error.hpp"
#include "settlemap/kernels.hpp"
#include "settlemap/rng.hpp"

namespace settlemap {

std::string_view to_string(Augmentation a) {
  switch (a) {
    case Augmentation::None:
      return "none";
    case Augmentation::H:
      return "h";
    case Augmentation::V:
      return "v";
    case Augmentation::HV:
      return "hv";
  }
  return "none";
}

Augmentation parse_augmentation(std::string_view s) {
  if (s == "none") return Augmentation::None;
  if (s == "h") return Augmentation::H;
  if (s == "v") return Augmentation::V;
  if (s == "hv") return Augmentation::HV;
  throw Error(ErrorCode::ParseError, "unknown augmentation '" + std::string(s) + "'");
}

TilePixels flip_horizontal(const TilePixels& t) {
  TilePixels out(t.width, t.height);
  for (int r = 0; r < t.height; ++r) {
    for (int c = 0; c < t.width; ++c) std::copy_n(t.px(c, r), 3, out.px(t.width - 1 - c, r));
  }
  return out;
}

TilePixels flip_vertical(const TilePixels& t) {
  TilePixels out(t.width, t.height);
  const auto row_bytes = static_cast<std::size_t>(t.width) * 3;
  for (int r = 0; r < t.height; ++r) std::copy_n(t.px(0, r), row_bytes, out.px(0, t.height - 1 - r));
  return out;
}

TilePixels apply_augmentation(const TilePixels& t, Augmentation a) {
  switch (a) {
    case Augmentation::None:
      return t;
    case Augmentation::H:
      return flip_horizontal(t);
    case Augmentation::V:
      return flip_vertical(t);
    case Augmentation::HV:
      return flip_vertical(flip_horizontal(t));
  }
  return t;
}

void validate(const TileSpec& spec) {
  if (spec.tile_size <= 0 || spec.stride <= 0 || spec.stride > spec.tile_size) {
    throw Error(ErrorCode::InvalidArgument, "tile spec needs tile_size > 0 and 0 < stride <= tile_size");
  }
}

std::vector<PixelWindow> enumerate_windows(int raster_w, int raster_h, const TileSpec& spec) {
  validate(spec);
  if (raster_w < spec.tile_size || raster_h < spec.tile_size) {
    throw Error(ErrorCode::RasterTooSmall, "raster " + std::to_string(raster_w) + "x" + std::to_string(raster_h) +
                                               " is smaller than one " + std::to_string(spec.tile_size) + " px tile");
  }
  std::vector<PixelWindow> out;
  for (int row = 0; row + spec.tile_size <= raster_h; row += spec.stride) {
    for (int col = 0; col + spec.tile_size <= raster_w; col += spec.stride) {
      out.push_back({col, row, spec.tile_size, spec.tile_size});
    }
  }
  return out;
}

std::string tile_id_for(const PixelWindow& w, int stride) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "r%04dc%04d", w.row_off / stride, w.col_off / stride);
  return buf;
}

std::vector<TileRecord> unlabeled_tiles(std::span<const PixelWindow> windows, const GeoTransform& t, int stride) {
  std::vector<TileRecord> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    out.push_back({tile_id_for(w, stride), w, window_footprint(t, w), false, Split::None, Augmentation::None});
  }
  return out;
}

std::vector<TileRecord> label_tiles(std::span<const PixelWindow> windows, const GeoTransform& t,
                                    const FeatureCollection& truth, int stride) {
  if (!crs_compatible(t.crs, truth.crs)) {
    throw Error(ErrorCode::CrsMismatch, "truth polygons are in " + truth.crs + " but the raster is in " + t.crs);
  }
  auto out = unlabeled_tiles(windows, t, stride);
  std::vector<RectFootprint> footprints;
  footprints.reserve(out.size());
  for (const auto& r : out) footprints.push_back(r.footprint);
  const auto polys = all_polygons(truth);
  const auto labels = kernels::label_footprints(footprints, polys);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].label = labels[k] != 0;
    out[k].split = Split::Train;
  }
  return out;
}

std::vector<TileRecord> undersample_negatives(std::span<const TileRecord> records, const UndersampleConfig& cfg) {
  if (!(cfg.ratio > 0.0)) throw Error(ErrorCode::InvalidArgument, "undersample ratio must be positive");
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].label) {
      ++positives;
    } else {
      negatives.push_back(k);
    }
  }
  if (positives == 0) throw Error(ErrorCode::NoPositives, "undersampling needs at least one positive tile");
  const auto quota = static_cast<std::size_t>(std::floor(cfg.ratio * static_cast<double>(positives)));
  const std::size_t keep = std::min(negatives.size(), quota);

  // Partial Fisher-Yates: the first `keep` slots become the sample.
  Rng rng(cfg.seed);
  for (std::size_t k = 0; k < keep; ++k) {
    const auto j = k + static_cast<std::size_t>(rng.below(negatives.size() - k));
    std::swap(negatives[k], negatives[j]);
  }
  std::vector<std::uint8_t> chosen(records.size(), 0);
  for (std::size_t k = 0; k < keep; ++k) chosen[negatives[k]] = 1;

  std::vector<TileRecord> out;
  out.reserve(positives + keep);
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].label || chosen[k]) out.push_back(records[k]);
  }
  return out;
}

std::vector<TileRecord> split_train_val(std::span<const TileRecord> records, double val_fraction,
                                        std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "val_fraction must lie in [0, 1)");
  }
  std::vector<TileRecord> out(records.begin(), records.end());
  Rng rng(seed);
  for (bool cls : {true, false}) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (out[k].label == cls) idx.push_back(k);
    }
    const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(idx.size()) + 0.5));
    rng.shuffle(idx);
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]].split = k < n_val ? Split::Val : Split::Train;
  }
  return out;
}

std::vector<TileRecord> augment(std::span<const TileRecord> records) {
  std::vector<TileRecord> out;
  out.reserve(records.size() * 4);
  for (const auto& r : records) {
    if (r.split != Split::Train) {
      out.push_back(r);
      continue;
    }
    for (auto a : {Augmentation::None, Augmentation::H, Augmentation::V, Augmentation::HV}) {
      TileRecord v = r;
      v.augmentation = a;
      if (a != Augmentation::None) v.tile_id += "_" + std::string(to_string(a));
      out.push_back(std::move(v));
    }
  }
  return out;
}

TilePixels extract_pixels(const RasterImage& raster, const PixelWindow& w, Augmentation a) {
  if (w.col_off < 0 || w.row_off < 0 || w.width <= 0 || w.height <= 0 || w.col_off + w.width > raster.width ||
      w.row_off + w.height > raster.height) {
    throw Error(ErrorCode::OutOfBounds, "window lies outside the raster");
  }
  TilePixels t(w.width, w.height);
  const auto row_bytes = static_cast<std::size_t>(w.width) * 3;
  for (int r = 0; r < w.height; ++r) std::copy_n(raster.px(w.col_off, w.row_off + r), row_bytes, t.px(0, r));
  return a == Augmentation::None ? t : apply_augmentation(t, a);
}

void TileStore::put(const std::string& tile_id, const TilePixels& px) const {
  detail::write_file(path_for(tile_id),
                     std::string_view(reinterpret_cast<const char*>(px.data.data()), px.data.size()));
}

bool TileStore::contains(const std::string& tile_id) const { return std::filesystem::exists(path_for(tile_id)); }

TilePixels TileStore::get(const TileRecord& record) const {
  const auto path = path_for(record.tile_id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingTile, "no pixels stored for tile " + record.tile_id);
  TilePixels t(record.window.width, record.window.height);
  in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(t.data.size()) || in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::MissingTile, "pixel blob for tile " + record.tile_id + " has the wrong size");
  }
  return t;
}

}  // namespace settlemap
