#include <doctest.h>

#include "settlemap/error.hpp"
#include "settlemap/kernels.hpp"
#include "test_support.hpp"

using namespace settlemap;

namespace {

// Lattice-snapped polygons so vertices and horizontal edges land exactly on
// pixel-centre rows and columns, which is where the scanline has to fall back.
PolygonGeom random_polygon(Rng& rng, double snap) {
  auto coord = [&](double lo, double hi) { return lo + std::round(rng.unit() * (hi - lo) / snap) * snap; };
  const double cx = coord(5, 25), cy = coord(-25, -5);
  const int n = 3 + static_cast<int>(rng.below(6));
  Ring r;
  for (int k = 0; k < n; ++k) {
    const double ang = 2 * 3.141592653589793 * (k + rng.unit() * 0.8) / n;
    const double rad = 2 + rng.unit() * 10;
    r.push_back({std::round((cx + rad * std::cos(ang)) / snap) * snap,
                 std::round((cy + rad * std::sin(ang)) / snap) * snap});
  }
  r.push_back(r.front());
  PolygonGeom p{r, {}};
  if (rng.unit() < 0.4) p.holes.push_back(testutil::rect_poly(cx - 1, cy - 1, cx + 1.5, cy + 0.5).exterior);
  return p;
}

std::vector<RectFootprint> enumerate_like(Rng& rng) {
  std::vector<RectFootprint> out;
  const double size = 1 + static_cast<double>(rng.below(8));
  for (int j = 0; j < 10; ++j) {
    for (int i = 0; i < 10; ++i) out.push_back({i * 3.0, -j * 3.0 - size, i * 3.0 + size, -j * 3.0});
  }
  return out;
}

struct ThreadGuard {
  ~ThreadGuard() { kernels::set_thread_count(0); }
};

}  // namespace

TEST_CASE("parallel kernels equal the serial references") {
  ThreadGuard guard;
  Rng rng(555);
  for (int threads : {1, 2, 4, 7}) {
    kernels::set_thread_count(threads);
    CHECK(kernels::thread_count() == threads);
    for (int trial = 0; trial < 25; ++trial) {
      const double snap = trial % 3 == 0 ? 0.5 : (trial % 3 == 1 ? 0.25 : 1e-3);
      MultiPolygonGeom mp;
      const int parts = 1 + static_cast<int>(rng.below(3));
      for (int k = 0; k < parts; ++k) mp.parts.push_back(random_polygon(rng, snap));
      const GeoTransform t{0, 0, 0.5, -0.5, ""};
      REQUIRE(kernels::rasterize(mp, t, 64, 64) == reference::rasterize(mp, t, 64, 64));

      const auto fps = enumerate_like(rng);
      const auto polys = mp.parts;
      REQUIRE(kernels::label_footprints(fps, polys) == reference::label_footprints(fps, polys));

      std::vector<GridValue> cells;
      for (int j = 0; j < 12; ++j) {
        for (int i = 0; i < 12; ++i) {
          if (rng.unit() < 0.6) cells.push_back({i - 3, j - 5, rng.unit()});
        }
      }
      REQUIRE(kernels::median3x3(cells) == reference::median3x3(cells));

      std::vector<RectFootprint> squares;
      for (int k = 0; k < 10; ++k) {
        const double x = std::round(rng.unit() * 60) * 0.5, y = -std::round(rng.unit() * 60) * 0.5;
        squares.push_back({x, y - 4, x + 4, y});
      }
      const auto a = kernels::block_coverage(polys, squares, 256);
      const auto b = reference::block_coverage(polys, squares, 256);
      REQUIRE(a == b);
    }
  }
}

TEST_CASE("featurize_tiles is order-stable and rethrows the first failure") {
  ThreadGuard guard;
  Rng rng(9);
  std::vector<TilePixels> tiles;
  for (int k = 0; k < 40; ++k) {
    TilePixels t{8, 8, std::vector<std::uint8_t>(192)};
    for (auto& v : t.data) v = static_cast<std::uint8_t>(rng.below(256));
    tiles.push_back(t);
  }
  const TileFetch fetch = [&](std::size_t k) { return tiles[k]; };
  const auto ref = reference::featurize_tiles(tiles.size(), fetch);
  for (int threads : {1, 3, 8}) {
    kernels::set_thread_count(threads);
    CHECK(kernels::featurize_tiles(tiles.size(), fetch) == ref);
  }
  tiles[5].width = 1;
  tiles[5].data.resize(24);
  tiles[30].width = 1;
  tiles[30].data.resize(24);
  kernels::set_thread_count(4);
  CHECK_THROWS_AS(kernels::featurize_tiles(tiles.size(), fetch), Error);
}
