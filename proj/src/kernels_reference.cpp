// Serial, direct implementations. They define the expected output of the
// parallel kernels and are kept deliberately naive.

#include <algorithm>

#include "kernel_support.hpp"
#include "settlemap/kernels.hpp"

namespace settlemap::reference {

BitMask rasterize(const MultiPolygonGeom& geoms, const GeoTransform& t, int width, int height) {
  validate(t);
  if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative raster size");
  BitMask mask(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (point_in_multipolygon(pixel_to_geo(t, c + 0.5, r + 0.5), geoms)) mask.set(c, r);
    }
  }
  return mask;
}

std::vector<std::uint8_t> label_footprints(std::span<const RectFootprint> footprints,
                                           std::span<const PolygonGeom> truth) {
  std::vector<std::uint8_t> labels(footprints.size(), 0);
  for (std::size_t k = 0; k < footprints.size(); ++k) {
    for (const auto& p : truth) {
      if (rect_intersects_polygon(footprints[k], p)) {
        labels[k] = 1;
        break;
      }
    }
  }
  return labels;
}

std::vector<double> median3x3(std::span<const GridValue> cells) {
  detail::index_cells(cells);  // duplicate check only
  std::vector<double> out(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    std::vector<double> window;
    for (std::int64_t dj = -1; dj <= 1; ++dj) {
      for (std::int64_t di = -1; di <= 1; ++di) {
        double v = 0.0;
        for (const auto& other : cells) {
          if (other.i == cells[k].i + di && other.j == cells[k].j + dj) v = other.value;
        }
        window.push_back(v);
      }
    }
    std::sort(window.begin(), window.end());
    out[k] = window[4];
  }
  return out;
}

std::vector<double> block_coverage(std::span<const PolygonGeom> blocks, std::span<const RectFootprint> squares,
                                   int samples) {
  if (samples <= 0) throw Error(ErrorCode::InvalidArgument, "coverage needs a positive sample count");
  std::vector<double> out(blocks.size(), 0.0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const RectFootprint box = bounds(blocks[b].exterior);
    const double dx = (box.max_x - box.min_x) / samples;
    const double dy = (box.max_y - box.min_y) / samples;
    std::size_t inside = 0, covered = 0;
    for (int r = 0; r < samples; ++r) {
      for (int c = 0; c < samples; ++c) {
        const Point p{box.min_x + (c + 0.5) * dx, box.min_y + (r + 0.5) * dy};
        if (!point_in_polygon(p, blocks[b])) continue;
        ++inside;
        for (const auto& s : squares) {
          if (s.min_x <= p.x && p.x <= s.max_x && s.min_y <= p.y && p.y <= s.max_y) {
            ++covered;
            break;
          }
        }
      }
    }
    out[b] = inside ? static_cast<double>(covered) / static_cast<double>(inside) : 0.0;
  }
  return out;
}

std::vector<FeatureVector> featurize_tiles(std::size_t count, const TileFetch& fetch) {
  std::vector<FeatureVector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(featurize(fetch(k)));
  return out;
}

}  // namespace settlemap::reference
