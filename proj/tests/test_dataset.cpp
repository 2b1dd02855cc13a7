#include <doctest.h>

#include <set>

#include "settlemap/dataset.hpp"
#include "settlemap/error.hpp"
#include "settlemap/tile.hpp"
#include "test_support.hpp"

using namespace settlemap;

namespace {

// `positives` labels spread evenly through the list.
std::vector<TileRecord> make_records(int positives, int negatives) {
  const int total = positives + negatives;
  std::vector<TileRecord> out;
  for (int k = 0; k < total; ++k) {
    TileRecord r;
    r.tile_id = "t" + std::to_string(k);
    r.label = (k * positives) / total != ((k + 1) * positives) / total;
    out.push_back(r);
  }
  return out;
}

TilePixels random_tile(Rng& rng, int w, int h) {
  TilePixels t;
  t.width = w;
  t.height = h;
  t.data.resize(static_cast<std::size_t>(w) * h * 3);
  for (auto& v : t.data) v = static_cast<std::uint8_t>(rng.below(256));
  return t;
}

}  // namespace

TEST_CASE("enumerate_windows") {
  CHECK(enumerate_windows(256, 256, {128, 128}).size() == 4);
  CHECK(enumerate_windows(128, 128, {128, 64}).size() == 1);
  const auto w = enumerate_windows(300, 128, {128, 64});
  REQUIRE(w.size() == 3);
  CHECK(w[0].col_off == 0);
  CHECK(w[1].col_off == 64);
  CHECK(w[2].col_off == 128);
  CHECK_THROWS_AS(enumerate_windows(100, 300, {128, 64}), Error);
  CHECK_THROWS_AS(enumerate_windows(300, 300, {128, 0}), Error);
  CHECK_THROWS_AS(enumerate_windows(300, 300, {128, 129}), Error);

  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const int tile = 1 + static_cast<int>(rng.below(40));
    const TileSpec spec{tile, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(tile)))};
    const int rw = tile + static_cast<int>(rng.below(100)), rh = tile + static_cast<int>(rng.below(100));
    const auto ws = enumerate_windows(rw, rh, spec);
    const std::size_t per_x = static_cast<std::size_t>((rw - tile) / spec.stride + 1);
    const std::size_t per_y = static_cast<std::size_t>((rh - tile) / spec.stride + 1);
    REQUIRE(ws.size() == per_x * per_y);
    for (const auto& win : ws) {
      REQUIRE(win.col_off + win.width <= rw);
      REQUIRE(win.row_off + win.height <= rh);
    }
  }
}

TEST_CASE("label_tiles") {
  const GeoTransform t{0, 256, 1, -1, "EPSG:32616"};
  const auto windows = enumerate_windows(256, 256, {128, 128});
  FeatureCollection truth;
  truth.crs = "EPSG:32616";
  const auto unlabeled = label_tiles(windows, t, truth, 128);
  CHECK(std::none_of(unlabeled.begin(), unlabeled.end(), [](const TileRecord& r) { return r.label; }));

  // Overlaps the top two windows only (rows 0..127 are y in [128, 256]).
  Feature f;
  f.geometry.parts.push_back(testutil::rect_poly(10, 140, 200, 250));
  truth.features.push_back(f);
  const auto recs = label_tiles(windows, t, truth, 128);
  REQUIRE(recs.size() == 4);
  CHECK(recs[0].label);
  CHECK(recs[1].label);
  CHECK_FALSE(recs[2].label);
  CHECK_FALSE(recs[3].label);
  CHECK(recs[0].tile_id == "r0000c0000");
  CHECK(recs[1].tile_id == "r0000c0001");
  CHECK(recs[0].footprint == window_footprint(t, windows[0]));

  FeatureCollection other = truth;
  other.crs = "EPSG:4326";
  CHECK_THROWS_AS(label_tiles(windows, t, other, 128), Error);
}

TEST_CASE("label_tiles agrees with a per-window oracle on random small rasters") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    oracle::CellSet cells(20, 20);
    FeatureCollection truth;
    for (int j = 0; j < 20; ++j) {
      for (int i = 0; i < 20; ++i) {
        if (rng.unit() < 0.04) {
          cells.set(i, j);
          Feature f;
          f.geometry.parts.push_back(testutil::rect_poly(i, j, i + 1, j + 1));
          truth.features.push_back(f);
        }
      }
    }
    // Pixel (c, r) covers [c, c+1] x [19 - r, 20 - r].
    const GeoTransform t{0, 20, 1, -1, ""};
    const TileSpec spec{5 + static_cast<int>(rng.below(4)), 4 + static_cast<int>(rng.below(2))};
    const auto windows = enumerate_windows(20, 20, spec);
    REQUIRE(windows.size() <= 20);
    const auto recs = label_tiles(windows, t, truth, spec.stride);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const auto& w = windows[k];
      const RectFootprint fp{double(w.col_off), double(20 - w.row_off - w.height), double(w.col_off + w.width),
                             double(20 - w.row_off)};
      bool expect = false;
      for (int j = 0; j < 20; ++j) {
        for (int i = 0; i < 20; ++i) {
          if (cells.at(i, j) && i <= fp.max_x && i + 1 >= fp.min_x && j <= fp.max_y && j + 1 >= fp.min_y) expect = true;
        }
      }
      REQUIRE(recs[k].label == expect);
    }
  }
}

TEST_CASE("undersample_negatives") {
  const auto recs = make_records(10, 100);
  const auto out = undersample_negatives(recs, {4.0, 123});
  const auto pos = std::count_if(out.begin(), out.end(), [](const TileRecord& r) { return r.label; });
  CHECK(pos == 10);
  CHECK(out.size() == 50);
  std::set<std::string> ids;
  for (const auto& r : out) ids.insert(r.tile_id);
  CHECK(ids.size() == out.size());
  CHECK(undersample_negatives(recs, {4.0, 123}) == out);
  CHECK(undersample_negatives(recs, {4.0, 124}) != out);

  CHECK(undersample_negatives(make_records(10, 3), {4.0, 1}).size() == 13);
  CHECK(undersample_negatives(make_records(3, 100), {2.5, 1}).size() == 3 + 7);
  CHECK_THROWS_AS(undersample_negatives(make_records(0, 10), {4.0, 1}), Error);
}

TEST_CASE("split_train_val is stratified and seeded") {
  const auto recs = make_records(10, 40);
  const auto out = split_train_val(recs, 0.2, 9);
  int vp = 0, vn = 0;
  for (const auto& r : out) {
    if (r.split == Split::Val) (r.label ? vp : vn)++;
  }
  CHECK(vp == 2);
  CHECK(vn == 8);
  CHECK(split_train_val(recs, 0.2, 9) == out);
  const auto none = split_train_val(recs, 0.0, 9);
  CHECK(std::all_of(none.begin(), none.end(), [](const TileRecord& r) { return r.split == Split::Train; }));
}

TEST_CASE("augment expands train records four ways") {
  auto recs = make_records(3, 10);
  for (auto& r : recs) r.split = Split::Train;
  const auto out = augment(recs);
  CHECK(out.size() == 52);
  CHECK(out[1].tile_id == recs[0].tile_id + "_h");
  CHECK(out[3].augmentation == Augmentation::HV);
  CHECK(out[3].label == recs[0].label);
  recs[0].split = Split::Val;
  CHECK(augment(recs).size() == 49);
}

TEST_CASE("flip algebra on random tiles") {
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const auto t = random_tile(rng, 1 + static_cast<int>(rng.below(9)), 1 + static_cast<int>(rng.below(9)));
    CHECK(flip_horizontal(flip_horizontal(t)).data == t.data);
    CHECK(flip_vertical(flip_vertical(t)).data == t.data);
    CHECK(flip_horizontal(flip_vertical(t)).data == flip_vertical(flip_horizontal(t)).data);
    CHECK(apply_augmentation(t, Augmentation::HV).data == flip_vertical(flip_horizontal(t)).data);
  }
  TilePixels two{2, 2, {1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4}};
  CHECK(flip_horizontal(two).data == std::vector<std::uint8_t>{2, 2, 2, 1, 1, 1, 4, 4, 4, 3, 3, 3});
  CHECK(flip_vertical(two).data == std::vector<std::uint8_t>{3, 3, 3, 4, 4, 4, 1, 1, 1, 2, 2, 2});
}

TEST_CASE("extract_pixels") {
  RasterImage img(4, 4, GeoTransform{0, 0, 1, -1, ""});
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      for (int b = 0; b < 3; ++b) img.px(c, r)[b] = static_cast<std::uint8_t>(r * 40 + c * 10 + b);
    }
  }
  const auto full = extract_pixels(img, {0, 0, 4, 4});
  CHECK(full.data == img.pixels);
  const auto sub = extract_pixels(img, {1, 1, 2, 2});
  CHECK(sub.data == std::vector<std::uint8_t>{50, 51, 52, 60, 61, 62, 90, 91, 92, 100, 101, 102});
  const auto h = extract_pixels(img, {1, 1, 2, 2}, Augmentation::H);
  CHECK(h.data == std::vector<std::uint8_t>{60, 61, 62, 50, 51, 52, 100, 101, 102, 90, 91, 92});
  CHECK_THROWS_AS(extract_pixels(img, {3, 3, 2, 2}), Error);
}

TEST_CASE("TileStore round trip") {
  const auto dir = testutil::temp_dir("store");
  const TileStore store(dir);
  Rng rng(2);
  const auto t = random_tile(rng, 8, 8);
  store.put("r0001c0002_h", t);
  TileRecord rec;
  rec.tile_id = "r0001c0002_h";
  rec.window = {0, 0, 8, 8};
  CHECK(store.contains(rec.tile_id));
  CHECK(store.get(rec).data == t.data);
  rec.tile_id = "missing";
  try {
    store.get(rec);
    FAIL("expected MissingTile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingTile);
  }
  std::filesystem::remove_all(dir);
}
