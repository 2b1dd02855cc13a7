#include <doctest.h>

#include <cstring>

#include "settlemap/classifier.hpp"
#include "settlemap/error.hpp"
#include "settlemap/geojson.hpp"
#include "settlemap/manifest.hpp"
#include "settlemap/raster.hpp"
#include "test_support.hpp"

using namespace settlemap;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

// Little-endian TIFF assembled field by field.
struct TiffBuilder {
  struct Entry {
    std::uint16_t tag, type;
    std::uint32_t count;
    std::vector<std::uint8_t> payload;
  };
  std::vector<Entry> entries;

  static std::vector<std::uint8_t> shorts(std::initializer_list<std::uint16_t> v) {
    std::vector<std::uint8_t> b;
    for (auto s : v) {
      b.push_back(static_cast<std::uint8_t>(s & 0xff));
      b.push_back(static_cast<std::uint8_t>(s >> 8));
    }
    return b;
  }
  static std::vector<std::uint8_t> longs(std::initializer_list<std::uint32_t> v) {
    std::vector<std::uint8_t> b;
    for (auto s : v) {
      for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>(s >> (8 * k)));
    }
    return b;
  }
  static std::vector<std::uint8_t> doubles(std::initializer_list<double> v) {
    std::vector<std::uint8_t> b;
    for (double d : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, 8);
      for (int k = 0; k < 8; ++k) b.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
    }
    return b;
  }
  void add_short(std::uint16_t tag, std::initializer_list<std::uint16_t> v) {
    entries.push_back({tag, 3, static_cast<std::uint32_t>(v.size()), shorts(v)});
  }
  void add_long(std::uint16_t tag, std::uint32_t v) { entries.push_back({tag, 4, 1, longs({v})}); }
  void add_double(std::uint16_t tag, std::initializer_list<double> v) {
    entries.push_back({tag, 12, static_cast<std::uint32_t>(v.size()), doubles(v)});
  }

  // Pixel data goes last; StripOffsets (273) must already be present.
  std::string build(const std::vector<std::uint8_t>& pixels) {
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.tag < b.tag; });
    std::vector<std::uint8_t> out{'I', 'I', 42, 0, 8, 0, 0, 0};
    const std::size_t ifd_size = 2 + 12 * entries.size() + 4;
    std::size_t data = 8 + ifd_size;
    std::vector<std::uint8_t> extra;
    std::vector<std::uint8_t> ifd = shorts({static_cast<std::uint16_t>(entries.size())});
    std::size_t pixel_offset = data;
    for (const auto& e : entries) {
      if (e.payload.size() > 4) pixel_offset += e.payload.size();
    }
    for (auto& e : entries) {
      if (e.tag == 273) e.payload = longs({static_cast<std::uint32_t>(pixel_offset)});
      auto tag = shorts({e.tag, e.type});
      ifd.insert(ifd.end(), tag.begin(), tag.end());
      auto cnt = longs({e.count});
      ifd.insert(ifd.end(), cnt.begin(), cnt.end());
      if (e.payload.size() <= 4) {
        auto v = e.payload;
        v.resize(4, 0);
        ifd.insert(ifd.end(), v.begin(), v.end());
      } else {
        auto off = longs({static_cast<std::uint32_t>(data + extra.size())});
        ifd.insert(ifd.end(), off.begin(), off.end());
        extra.insert(extra.end(), e.payload.begin(), e.payload.end());
      }
    }
    auto next = longs({0});
    ifd.insert(ifd.end(), next.begin(), next.end());
    out.insert(out.end(), ifd.begin(), ifd.end());
    out.insert(out.end(), extra.begin(), extra.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    return std::string(out.begin(), out.end());
  }
};

std::string golden_2x2(std::uint16_t bits = 8, bool georef = true) {
  TiffBuilder b;
  b.add_short(256, {2});
  b.add_short(257, {2});
  b.add_short(258, {bits, bits, bits});
  b.add_short(259, {1});
  b.add_short(262, {2});
  b.add_long(273, 0);
  b.add_short(277, {3});
  b.add_short(278, {2});
  b.add_long(279, 12u * (bits / 8));
  if (georef) {
    b.add_double(33550, {0.5, 0.5, 0.0});
    b.add_double(33922, {0, 0, 0, 300000.0, 5000000.0, 0});
  }
  std::vector<std::uint8_t> px{10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
  px.resize(12u * (bits / 8), 0);
  return b.build(px);
}

RasterImage gradient_image(int w, int h, GeoTransform t) {
  RasterImage img(w, h, std::move(t));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      auto* p = img.px(c, r);
      p[0] = static_cast<std::uint8_t>(c * 7 + r);
      p[1] = static_cast<std::uint8_t>(r * 13);
      p[2] = static_cast<std::uint8_t>((c ^ r) * 3);
    }
  }
  return img;
}

}  // namespace

TEST_CASE("hand-assembled 2x2 GeoTIFF loads with its tags") {
  const auto dir = testutil::temp_dir("tiff_golden");
  testutil::spit(dir / "golden.tif", golden_2x2());
  const RasterImage img = load_raster(dir / "golden.tif");
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.pixels == std::vector<std::uint8_t>{10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120});
  CHECK(img.transform.origin_x == 300000.0);
  CHECK(img.transform.origin_y == 5000000.0);
  CHECK(img.transform.pixel_w == 0.5);
  CHECK(img.transform.pixel_h == -0.5);
  CHECK(img.transform.crs.empty());
  fs::remove_all(dir);
}

TEST_CASE("load_raster error paths") {
  const auto dir = testutil::temp_dir("tiff_errors");
  testutil::spit(dir / "deep.tif", golden_2x2(16));
  CHECK(code_of([&] { load_raster(dir / "deep.tif"); }) == ErrorCode::UnsupportedFormat);
  testutil::spit(dir / "plain.tif", golden_2x2(8, false));
  CHECK(code_of([&] { load_raster(dir / "plain.tif"); }) == ErrorCode::MissingGeoreference);
  testutil::spit(dir / "junk.tif", "not an image at all");
  CHECK(code_of([&] { load_raster(dir / "junk.tif"); }) == ErrorCode::UnsupportedFormat);
  CHECK(code_of([&] { load_raster(dir / "absent.tif"); }) == ErrorCode::IoError);
  fs::remove_all(dir);
}

TEST_CASE("world file sidecar supplies the transform") {
  const GeoTransform t = parse_world_file("0.5\n0\n0\n-0.5\n100.25\n200.75\n");
  CHECK(t.origin_x == 100.0);
  CHECK(t.origin_y == 201.0);
  CHECK(t.pixel_w == 0.5);
  CHECK(t.pixel_h == -0.5);
  CHECK(code_of([] { parse_world_file("0.5\n0.1\n0\n-0.5\n1\n2\n"); }) == ErrorCode::RotatedTransform);
  CHECK(code_of([] { parse_world_file("0.5\n0\n0\n"); }) == ErrorCode::ParseError);

  const auto dir = testutil::temp_dir("pgw");
  const RasterImage img = gradient_image(5, 3, GeoTransform{0, 0, 1, -1, ""});
  write_png(img, dir / "plain.png");
  CHECK(code_of([&] { load_raster(dir / "plain.png"); }) == ErrorCode::MissingGeoreference);
  testutil::spit(dir / "plain.pgw", "0.5\n0\n0\n-0.5\n100.25\n200.75\n");
  const RasterImage back = load_raster(dir / "plain.png");
  CHECK(back.pixels == img.pixels);
  CHECK(back.transform.origin_x == 100.0);
  CHECK(back.transform.origin_y == 201.0);

  write_geotiff(img, dir / "bare.tif", {.georeference = false});
  testutil::spit(dir / "bare.tfw", "2\n0\n0\n-2\n11\n19\n");
  const RasterImage tif = load_raster(dir / "bare.tif");
  CHECK(tif.transform.origin_x == 10.0);
  CHECK(tif.transform.origin_y == 20.0);
  fs::remove_all(dir);
}

TEST_CASE("GeoTIFF writer/reader round trip across layouts") {
  const auto dir = testutil::temp_dir("tiff_roundtrip");
  const RasterImage img = gradient_image(37, 29, GeoTransform{470000.5, 1620000.25, 0.5, -0.5, "EPSG:32616"});
  TiffWriteOptions variants[] = {
      {},
      {.deflate = true},
      {.deflate = true, .horizontal_predictor = true},
      {.deflate = false, .horizontal_predictor = false, .tile_size = 16},
      {.deflate = true, .horizontal_predictor = true, .tile_size = 32},
      {.deflate = false, .horizontal_predictor = false, .tile_size = 0, .rows_per_strip = 5},
  };
  int k = 0;
  for (const auto& opt : variants) {
    const auto path = dir / ("v" + std::to_string(k++) + ".tif");
    write_geotiff(img, path, opt);
    const RasterImage back = load_raster(path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(back.pixels == img.pixels);
    CHECK(back.transform.origin_x == img.transform.origin_x);
    CHECK(back.transform.origin_y == img.transform.origin_y);
    CHECK(back.transform.pixel_w == img.transform.pixel_w);
    CHECK(back.transform.pixel_h == img.transform.pixel_h);
    CHECK(back.transform.crs == "EPSG:32616");
  }
  write_geotiff(img, dir / "a.tif", {.deflate = true});
  write_geotiff(img, dir / "b.tif", {.deflate = true});
  CHECK(testutil::slurp(dir / "a.tif") == testutil::slurp(dir / "b.tif"));
  fs::remove_all(dir);
}

TEST_CASE("GeoJSON parsing") {
  const auto fc = parse_feature_collection(R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"name":"a","n":3,"p":0.25,"ok":true,"none":null},
     "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]})");
  REQUIRE(fc.features.size() == 1);
  CHECK(fc.features[0].geometry.parts.size() == 1);
  CHECK(fc.features[0].properties.number("n") == 3.0);
  CHECK(fc.features[0].properties.number("p") == 0.25);
  CHECK(std::get<std::string>(*fc.features[0].properties.find("name")) == "a");
  CHECK(fc.crs.empty());

  const auto multi = parse_feature_collection(R"({"type":"FeatureCollection",
    "crs":{"type":"name","properties":{"name":"urn:ogc:def:crs:EPSG::32616"}},"features":[
    {"type":"Feature","properties":{},"geometry":{"type":"MultiPolygon","coordinates":[
      [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
      [[[5,5],[9,5],[9,9],[5,9],[5,5]],[[6,6],[6,7],[7,7],[7,6],[6,6]]]]}}]})");
  REQUIRE(multi.features.size() == 1);
  CHECK(multi.features[0].geometry.parts.size() == 2);
  CHECK(multi.features[0].geometry.parts[1].holes.size() == 1);
  CHECK(multi.crs == "EPSG:32616");

  CHECK(code_of([] {
          parse_feature_collection(R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{},
            "geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]}}]})");
        }) == ErrorCode::UnsupportedGeometryType);
  CHECK(code_of([] { parse_feature_collection("{not json"); }) == ErrorCode::ParseError);
  CHECK(code_of([] {
          parse_feature_collection(R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{},
            "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}]})");
        }) == ErrorCode::ParseError);
}

TEST_CASE("GeoJSON write/read round trip") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureCollection fc;
    fc.crs = trial % 2 ? "EPSG:32616" : "";
    const int n = static_cast<int>(rng.below(5));
    for (int k = 0; k < n; ++k) {
      Feature f;
      const double x = 470000 + rng.unit() * 1000, y = 1620000 + rng.unit() * 1000;
      const double w = 1 + rng.unit() * 50, h = 1 + rng.unit() * 50;
      f.geometry.parts.push_back(testutil::rect_poly(x, y, x + w, y + h));
      f.properties.set("probability", rng.unit());
      f.properties.set("member_count", static_cast<std::int64_t>(rng.below(100)));
      f.properties.set("label", std::string("r") + std::to_string(k));
      fc.features.push_back(f);
    }
    const auto text = format_feature_collection(fc);
    const auto back = parse_feature_collection(text);
    CHECK(back.crs == fc.crs);
    REQUIRE(back.features.size() == fc.features.size());
    for (std::size_t k = 0; k < fc.features.size(); ++k) {
      CHECK(back.features[k].properties == fc.features[k].properties);
      const auto& a = fc.features[k].geometry.parts[0].exterior;
      const auto& b = back.features[k].geometry.parts[0].exterior;
      REQUIRE(a.size() == b.size());
      for (std::size_t v = 0; v < a.size(); ++v) {
        CHECK(std::abs(a[v].x - b[v].x) <= 1e-9);
        CHECK(std::abs(a[v].y - b[v].y) <= 1e-9);
      }
    }
    CHECK(format_feature_collection(back) == text);
  }
  const auto empty = format_feature_collection({});
  CHECK(parse_feature_collection(empty).features.empty());

  FeatureCollection one;
  Feature f;
  f.geometry.parts.push_back(testutil::rect_poly(0, 0, 1, 1));
  f.properties.set("probability", 0.7);
  one.features.push_back(f);
  const auto text = format_feature_collection(one);
  CHECK(text.find("\"probability\":0.7") != std::string::npos);
  CHECK(parse_feature_collection(text).features[0].properties.number("probability") == 0.7);
}

TEST_CASE("tile manifest round trip and validation") {
  TileManifest m;
  m.source = "scene.tif";
  m.raster_width = 256;
  m.raster_height = 256;
  m.tile_size = 128;
  m.stride = 64;
  m.transform = {470000, 1620000, 0.5, -0.5, "EPSG:32616"};
  for (int k = 0; k < 2; ++k) {
    TileRecord r;
    r.window = {k * 64, 0, 128, 128};
    r.tile_id = "r0000c000" + std::to_string(k);
    r.footprint = window_footprint(m.transform, r.window);
    r.label = k == 0;
    r.split = k == 0 ? Split::Train : Split::Val;
    r.augmentation = k == 0 ? Augmentation::HV : Augmentation::None;
    m.entries.push_back(r);
  }
  const auto text = format_tile_manifest(m);
  CHECK(parse_tile_manifest(text) == m);
  CHECK(format_tile_manifest(parse_tile_manifest(text)) == text);

  TileManifest dup = m;
  dup.entries[1].tile_id = dup.entries[0].tile_id;
  CHECK(code_of([&] { parse_tile_manifest(format_tile_manifest(dup)); }) == ErrorCode::ParseError);
  TileManifest outside = m;
  outside.entries[1].window.col_off = 200;
  CHECK(code_of([&] { parse_tile_manifest(format_tile_manifest(outside)); }) == ErrorCode::ParseError);
}

TEST_CASE("score file round trip and validation") {
  const auto dir = testutil::temp_dir("scores");
  const std::vector<ScoreRow> rows{{"r0000c0000", 0.125}, {"r0000c0001", 0.9999999999999999}, {"x", 0.0}};
  write_score_file(rows, dir / "s.tsv");
  CHECK(load_score_file(dir / "s.tsv") == rows);
  testutil::spit(dir / "bad.tsv", "a\t1.5\n");
  CHECK(code_of([&] { load_score_file(dir / "bad.tsv"); }) == ErrorCode::ParseError);
  testutil::spit(dir / "dup.tsv", "a\t0.5\na\t0.25\n");
  CHECK(code_of([&] { load_score_file(dir / "dup.tsv"); }) == ErrorCode::ParseError);
  fs::remove_all(dir);
}
