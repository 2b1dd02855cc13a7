#include <benchmark/benchmark.h>

#include <cmath>

#include "settlemap/kernels.hpp"
#include "settlemap/rng.hpp"

using namespace settlemap;

namespace {

MultiPolygonGeom star_field(int count) {
  Rng rng(1);
  MultiPolygonGeom mp;
  for (int k = 0; k < count; ++k) {
    const double cx = rng.unit() * 1000, cy = -rng.unit() * 1000;
    Ring r;
    const int n = 24;
    for (int v = 0; v < n; ++v) {
      const double a = 2 * 3.141592653589793 * v / n;
      const double rad = 20 + 30 * rng.unit();
      r.push_back({cx + rad * std::cos(a), cy + rad * std::sin(a)});
    }
    r.push_back(r.front());
    mp.parts.push_back({r, {}});
  }
  return mp;
}

std::vector<GridValue> grid_cells(int side) {
  Rng rng(2);
  std::vector<GridValue> cells;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) cells.push_back({i, j, rng.unit()});
  }
  return cells;
}

std::vector<RectFootprint> squares(int side, double size) {
  std::vector<RectFootprint> out;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) out.push_back({i * size / 2, j * size / 2, i * size / 2 + size, j * size / 2 + size});
  }
  return out;
}

std::vector<PolygonGeom> blocks(int side, double pitch) {
  std::vector<PolygonGeom> out;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      out.push_back(to_polygon({i * pitch + 2, j * pitch + 2, (i + 1) * pitch - 2, (j + 1) * pitch - 2}));
    }
  }
  return out;
}

TileFetch random_tiles(int size) {
  return [size](std::size_t k) {
    Rng rng(k);
    TilePixels t(size, size);
    for (auto& v : t.data) v = static_cast<std::uint8_t>(rng.below(256));
    return t;
  };
}

const GeoTransform kT{0, 0, 1, -1, ""};

void BM_rasterize(benchmark::State& s) {
  const auto mp = star_field(60);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::rasterize(mp, kT, 1024, 1024));
}
void BM_rasterize_reference(benchmark::State& s) {
  const auto mp = star_field(60);
  for (auto _ : s) benchmark::DoNotOptimize(reference::rasterize(mp, kT, 1024, 1024));
}

void BM_median3x3(benchmark::State& s) {
  const auto cells = grid_cells(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::median3x3(cells));
}
void BM_median3x3_reference(benchmark::State& s) {
  const auto cells = grid_cells(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(reference::median3x3(cells));
}

void BM_block_coverage(benchmark::State& s) {
  const auto b = blocks(8, 64);
  const auto sq = squares(32, 32);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::block_coverage(b, sq, 256));
}
void BM_block_coverage_reference(benchmark::State& s) {
  const auto b = blocks(8, 64);
  const auto sq = squares(32, 32);
  for (auto _ : s) benchmark::DoNotOptimize(reference::block_coverage(b, sq, 256));
}

void BM_featurize_tiles(benchmark::State& s) {
  const auto fetch = random_tiles(64);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::featurize_tiles(512, fetch));
}
void BM_featurize_tiles_reference(benchmark::State& s) {
  const auto fetch = random_tiles(64);
  for (auto _ : s) benchmark::DoNotOptimize(reference::featurize_tiles(512, fetch));
}

}  // namespace

BENCHMARK(BM_rasterize)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_rasterize_reference)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_median3x3)->Arg(32)->Arg(96)->UseRealTime();
BENCHMARK(BM_median3x3_reference)->Arg(32)->Arg(96)->UseRealTime();
BENCHMARK(BM_block_coverage)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_block_coverage_reference)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_featurize_tiles)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_featurize_tiles_reference)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
