#include "settlemap/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "settlemap/error.hpp"
#include "settlemap/kernels.hpp"

namespace settlemap {

SquareGrid square_grid(const GeoTransform& t, int tile_size, int stride) {
  validate(t);
  if (tile_size <= 0 || stride <= 0) throw Error(ErrorCode::InvalidArgument, "tile size and stride must be positive");
  const double g = std::gcd(tile_size, stride);
  return {t.origin_x, t.origin_y, std::abs(t.pixel_w) * g, std::abs(t.pixel_h) * g};
}

std::vector<ScoredSquare> median_filter(std::span<const ScoredSquare> squares, double p_min) {
  std::vector<GridValue> cells;
  cells.reserve(squares.size());
  for (const auto& s : squares) cells.push_back({s.grid_i, s.grid_j, s.probability});
  const auto medians = kernels::median3x3(cells);
  std::vector<ScoredSquare> out;
  for (std::size_t k = 0; k < squares.size(); ++k) {
    if (medians[k] >= p_min) out.push_back(squares[k]);
  }
  return out;
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

bool squares_connected(const RectFootprint& a, const RectFootprint& b) {
  const double ox = std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x);
  const double oy = std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y);
  return ox >= 0.0 && oy >= 0.0 && (ox > 0.0 || oy > 0.0);
}

}  // namespace

std::vector<DissolvedRegion> dissolve(std::span<const ScoredSquare> squares, const SquareGrid& grid) {
  const std::size_t n = squares.size();
  // Canonical order makes components, member lists and sums independent of
  // input order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = squares[a];
    const auto& sb = squares[b];
    if (sa.grid_j != sb.grid_j) return sa.grid_j < sb.grid_j;
    if (sa.grid_i != sb.grid_i) return sa.grid_i < sb.grid_i;
    return a < b;
  });

  // Sweep over min_x to find touching pairs.
  std::vector<std::size_t> by_x(order);
  std::stable_sort(by_x.begin(), by_x.end(),
                   [&](std::size_t a, std::size_t b) { return squares[a].footprint.min_x < squares[b].footprint.min_x; });
  std::vector<std::size_t> rank(n);
  for (std::size_t k = 0; k < n; ++k) rank[order[k]] = k;
  DisjointSets sets(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& fa = squares[by_x[a]].footprint;
    for (std::size_t b = a + 1; b < n && squares[by_x[b]].footprint.min_x <= fa.max_x; ++b) {
      if (squares_connected(fa, squares[by_x[b]].footprint)) sets.unite(rank[by_x[a]], rank[by_x[b]]);
    }
  }

  std::vector<DissolvedRegion> regions;
  std::vector<std::ptrdiff_t> region_of(n, -1);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t root = sets.find(k);
    if (region_of[root] < 0) {
      region_of[root] = static_cast<std::ptrdiff_t>(regions.size());
      regions.emplace_back();
    }
    regions[static_cast<std::size_t>(region_of[root])].members.push_back(order[k]);
  }
  for (auto& region : regions) {
    std::vector<RectFootprint> rects;
    double sum = 0.0;
    for (std::size_t m : region.members) {
      rects.push_back(squares[m].footprint);
      sum += squares[m].probability;
    }
    region.member_count = region.members.size();
    region.mean_probability = sum / static_cast<double>(region.member_count);
    region.geometry = rectilinear_union(rects, grid);
  }
  return regions;
}

FeatureCollection regions_to_features(std::span<const DissolvedRegion> regions, const std::string& crs) {
  FeatureCollection fc;
  fc.crs = crs;
  for (const auto& r : regions) {
    Feature f;
    f.geometry = r.geometry;
    f.properties.set("mean_probability", r.mean_probability);
    f.properties.set("member_count", static_cast<std::int64_t>(r.member_count));
    fc.features.push_back(std::move(f));
  }
  return fc;
}

FeatureCollection block_filter(std::span<const ScoredSquare> squares, const FeatureCollection& blocks,
                               const std::string& crs, double coverage_min, int samples) {
  if (!crs_compatible(crs, blocks.crs)) {
    throw Error(ErrorCode::CrsMismatch, "blocks are in " + blocks.crs + " but predictions are in " + crs);
  }
  if (samples < 256) throw Error(ErrorCode::InvalidArgument, "block coverage needs at least 256 samples per axis");
  std::vector<RectFootprint> rects;
  rects.reserve(squares.size());
  for (const auto& s : squares) rects.push_back(s.footprint);

  std::vector<PolygonGeom> block_geoms;
  std::vector<std::size_t> owner;  // block polygon -> feature
  for (std::size_t f = 0; f < blocks.features.size(); ++f) {
    // Multi-part blocks are measured as one: coverage over the union of parts.
    const auto& parts = blocks.features[f].geometry.parts;
    if (parts.empty()) continue;
    block_geoms.push_back(parts.size() == 1 ? parts[0] : PolygonGeom{});
    owner.push_back(f);
  }
  std::vector<double> coverage(blocks.features.size(), 0.0);
  {
    // Single-part blocks go through the kernel; multi-part ones are rare and
    // are measured one by one on their joint bounding box.
    std::vector<PolygonGeom> simple;
    std::vector<std::size_t> simple_owner;
    for (std::size_t k = 0; k < block_geoms.size(); ++k) {
      if (!block_geoms[k].exterior.empty()) {
        simple.push_back(block_geoms[k]);
        simple_owner.push_back(owner[k]);
      }
    }
    const auto cov = kernels::block_coverage(simple, rects, samples);
    for (std::size_t k = 0; k < simple.size(); ++k) coverage[simple_owner[k]] = cov[k];
    for (std::size_t k = 0; k < block_geoms.size(); ++k) {
      if (!block_geoms[k].exterior.empty()) continue;
      const auto& parts = blocks.features[owner[k]].geometry.parts;
      double covered_area = 0.0, total_area = 0.0;
      const auto part_cov = kernels::block_coverage(parts, rects, samples);
      for (std::size_t p = 0; p < parts.size(); ++p) {
        const double a = area(parts[p]);
        covered_area += part_cov[p] * a;
        total_area += a;
      }
      coverage[owner[k]] = total_area > 0.0 ? covered_area / total_area : 0.0;
    }
  }

  FeatureCollection out;
  out.crs = blocks.crs.empty() ? crs : blocks.crs;
  for (std::size_t f = 0; f < blocks.features.size(); ++f) {
    const auto& feature = blocks.features[f];
    double sum = 0.0;
    std::size_t touching = 0;
    for (const auto& s : squares) {
      const bool hit = std::any_of(feature.geometry.parts.begin(), feature.geometry.parts.end(),
                                   [&](const PolygonGeom& p) { return rect_intersects_polygon(s.footprint, p); });
      if (hit) {
        sum += s.probability;
        ++touching;
      }
    }
    if (touching == 0 || coverage[f] < coverage_min) continue;
    Feature kept = feature;
    if (!kept.properties.find("block_id")) kept.properties.set("block_id", static_cast<std::int64_t>(f));
    kept.properties.set("coverage_fraction", coverage[f]);
    kept.properties.set("mean_probability", sum / static_cast<double>(touching));
    out.features.push_back(std::move(kept));
  }
  return out;
}

FeatureCollection run_postprocess(std::span<const ScoredSquare> squares, const SquareGrid& grid,
                                  const std::string& crs, const PostprocessConfig& cfg,
                                  const FeatureCollection* blocks) {
  const auto survivors = median_filter(squares, cfg.p_min);
  if (cfg.block_filter) {
    if (!blocks) throw Error(ErrorCode::ConfigError, "block filtering needs a blocks file");
    return block_filter(survivors, *blocks, crs, cfg.coverage_min, cfg.coverage_samples);
  }
  const auto regions = dissolve(survivors, grid);
  return regions_to_features(regions, crs);
}

}  // namespace settlemap
