#include <omp.h>

#include <algorithm>
#include <cmath>

#include "geom_internal.hpp"
#include "kernel_support.hpp"
#include "settlemap/kernels.hpp"

namespace settlemap::kernels {

namespace {
int g_threads = 0;
}

void set_thread_count(int n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "thread count must be >= 0");
  g_threads = n;
  omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
}

int thread_count() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

namespace {

struct Crossing {
  double x;
  double tol;  // pixel centres closer than this go through point_in_polygon
};

// Crossings of every ring of `p` with the line at y, or false when the line
// passes through a vertex (then every pixel of the row needs the exact test).
bool row_crossings(const PolygonGeom& p, double y, std::vector<Crossing>& out) {
  out.clear();
  auto scan = [&](const Ring& ring) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const Point a = ring[i];
      const Point b = ring[i + 1];
      if (a.y == y || b.y == y) return false;
      if (detail::edge_spans(a, b, y)) {
        const double tol = 1e-9 * (std::abs(a.x) + std::abs(b.x) + 1.0);
        out.push_back({detail::edge_crossing_x(a, b, y), tol});
      }
    }
    return true;
  };
  if (!scan(p.exterior)) return false;
  for (const auto& h : p.holes) {
    if (!scan(h)) return false;
  }
  std::sort(out.begin(), out.end(), [](const Crossing& l, const Crossing& r) { return l.x < r.x; });
  return true;
}

}  // namespace

BitMask rasterize(const MultiPolygonGeom& geoms, const GeoTransform& t, int width, int height) {
  validate(t);
  if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative raster size");
  BitMask mask(width, height);
  std::vector<RectFootprint> boxes;
  // Holes count too: even-odd parity lets a stray hole add area.
  for (const auto& p : geoms.parts) {
    RectFootprint b = bounds(p.exterior);
    for (const auto& h : p.holes) {
      const auto hb = bounds(h);
      b = {std::min(b.min_x, hb.min_x), std::min(b.min_y, hb.min_y), std::max(b.max_x, hb.max_x),
           std::max(b.max_y, hb.max_y)};
    }
    boxes.push_back(b);
  }

#pragma omp parallel
  {
    std::vector<Crossing> xs;
    std::vector<double> keys;
#pragma omp for schedule(dynamic, 8)
    for (int r = 0; r < height; ++r) {
      const double y = pixel_to_geo(t, 0.5, r + 0.5).y;
      for (std::size_t k = 0; k < geoms.parts.size(); ++k) {
        const auto& part = geoms.parts[k];
        if (y < boxes[k].min_y || y > boxes[k].max_y) continue;
        const bool clean = row_crossings(part, y, xs);
        keys.clear();
        for (const auto& c : xs) keys.push_back(c.x);
        for (int c = 0; c < width; ++c) {
          if (mask.at(c, r)) continue;
          const Point pt = pixel_to_geo(t, c + 0.5, r + 0.5);
          if (pt.x < boxes[k].min_x || pt.x > boxes[k].max_x) continue;
          bool inside;
          if (!clean) {
            inside = point_in_polygon(pt, part);
          } else {
            const auto it = std::upper_bound(keys.begin(), keys.end(), pt.x);
            const auto idx = static_cast<std::size_t>(it - keys.begin());
            const bool near = (idx < xs.size() && xs[idx].x - pt.x <= xs[idx].tol) ||
                              (idx > 0 && pt.x - xs[idx - 1].x <= xs[idx - 1].tol);
            inside = near ? point_in_polygon(pt, part) : ((keys.size() - idx) % 2 == 1);
          }
          if (inside) mask.set(c, r);
        }
      }
    }
  }
  return mask;
}

std::vector<std::uint8_t> label_footprints(std::span<const RectFootprint> footprints,
                                           std::span<const PolygonGeom> truth) {
  std::vector<RectFootprint> boxes;
  boxes.reserve(truth.size());
  for (const auto& p : truth) boxes.push_back(bounds(p.exterior));
  std::vector<std::uint8_t> labels(footprints.size(), 0);
  const auto n = static_cast<std::ptrdiff_t>(footprints.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& f = footprints[static_cast<std::size_t>(k)];
    for (std::size_t p = 0; p < truth.size(); ++p) {
      if (rects_touch(f, boxes[p]) && rect_intersects_polygon(f, truth[p])) {
        labels[static_cast<std::size_t>(k)] = 1;
        break;
      }
    }
  }
  return labels;
}

std::vector<double> median3x3(std::span<const GridValue> cells) {
  const auto map = detail::index_cells(cells);
  std::vector<double> out(cells.size());
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& cell = cells[static_cast<std::size_t>(k)];
    double window[9];
    int w = 0;
    for (std::int64_t dj = -1; dj <= 1; ++dj) {
      for (std::int64_t di = -1; di <= 1; ++di) {
        const auto it = map.find(detail::grid_key(cell.i + di, cell.j + dj));
        window[w++] = it == map.end() ? 0.0 : it->second;
      }
    }
    std::nth_element(window, window + 4, window + 9);
    out[static_cast<std::size_t>(k)] = window[4];
  }
  return out;
}

std::vector<double> block_coverage(std::span<const PolygonGeom> blocks, std::span<const RectFootprint> squares,
                                   int samples) {
  if (samples <= 0) throw Error(ErrorCode::InvalidArgument, "coverage needs a positive sample count");
  std::vector<double> out(blocks.size(), 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks.size());
#pragma omp parallel
  {
    std::vector<double> xs(static_cast<std::size_t>(samples)), ys(static_cast<std::size_t>(samples));
    std::vector<std::uint8_t> covered(static_cast<std::size_t>(samples) * samples);
#pragma omp for schedule(dynamic, 1)
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
      const auto& block = blocks[static_cast<std::size_t>(b)];
      const RectFootprint box = bounds(block.exterior);
      const double dx = (box.max_x - box.min_x) / samples;
      const double dy = (box.max_y - box.min_y) / samples;
      for (int s = 0; s < samples; ++s) {
        xs[static_cast<std::size_t>(s)] = box.min_x + (s + 0.5) * dx;
        ys[static_cast<std::size_t>(s)] = box.min_y + (s + 0.5) * dy;
      }
      std::fill(covered.begin(), covered.end(), std::uint8_t{0});
      for (const auto& sq : squares) {
        if (!rects_touch(sq, box)) continue;
        const auto c0 = std::lower_bound(xs.begin(), xs.end(), sq.min_x) - xs.begin();
        const auto c1 = std::upper_bound(xs.begin(), xs.end(), sq.max_x) - xs.begin();
        const auto r0 = std::lower_bound(ys.begin(), ys.end(), sq.min_y) - ys.begin();
        const auto r1 = std::upper_bound(ys.begin(), ys.end(), sq.max_y) - ys.begin();
        for (auto r = r0; r < r1; ++r) {
          std::fill(covered.begin() + r * samples + c0, covered.begin() + r * samples + c1, std::uint8_t{1});
        }
      }
      std::size_t inside = 0, hit = 0;
      for (int r = 0; r < samples; ++r) {
        for (int c = 0; c < samples; ++c) {
          if (!point_in_polygon({xs[static_cast<std::size_t>(c)], ys[static_cast<std::size_t>(r)]}, block)) continue;
          ++inside;
          hit += covered[static_cast<std::size_t>(r) * samples + c];
        }
      }
      out[static_cast<std::size_t>(b)] = inside ? static_cast<double>(hit) / static_cast<double>(inside) : 0.0;
    }
  }
  return out;
}

std::vector<FeatureVector> featurize_tiles(std::size_t count, const TileFetch& fetch) {
  std::vector<FeatureVector> out(count);
  detail::FirstError first;
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      out[static_cast<std::size_t>(k)] = featurize(fetch(static_cast<std::size_t>(k)));
    } catch (...) {
      first.record(static_cast<std::size_t>(k), std::current_exception());
    }
  }
  first.rethrow();
  return out;
}

}  // namespace settlemap::kernels
