#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "settlemap/error.hpp"
#include "settlemap/geo_core.hpp"

namespace settlemap {

namespace {

std::int64_t lattice_index(double v, double origin, double step) {
  const double k = (v - origin) / step;
  const double r = std::round(k);
  if (!(std::abs(k - r) <= 1e-6) || std::abs(r) > 1e15) {
    throw Error(ErrorCode::NonAlignedInput, "square edge does not lie on the dissolve lattice");
  }
  return static_cast<std::int64_t>(r);
}

struct LatticeRect {
  std::int64_t x0, y0, x1, y1;
};

// Direction codes: 0 east, 1 north, 2 west, 3 south.
constexpr std::array<int, 4> kDx{1, 0, -1, 0};
constexpr std::array<int, 4> kDy{0, 1, 0, -1};

struct Edge {
  int from;
  int to;
  int dir;
  int component;
  bool used = false;
};

}  // namespace

MultiPolygonGeom rectilinear_union(std::span<const RectFootprint> squares, const SquareGrid& grid) {
  MultiPolygonGeom out;
  if (squares.empty()) return out;
  if (!(grid.step_x > 0.0 && grid.step_y > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "dissolve lattice steps must be positive");
  }

  std::vector<LatticeRect> rects;
  rects.reserve(squares.size());
  for (const auto& s : squares) {
    rects.push_back({lattice_index(s.min_x, grid.origin_x, grid.step_x),
                     lattice_index(s.min_y, grid.origin_y, grid.step_y),
                     lattice_index(s.max_x, grid.origin_x, grid.step_x),
                     lattice_index(s.max_y, grid.origin_y, grid.step_y)});
    const auto& r = rects.back();
    const auto& f = rects.front();
    if (r.x1 <= r.x0 || r.y1 <= r.y0) throw Error(ErrorCode::NonAlignedInput, "degenerate square");
    if (r.x1 - r.x0 != f.x1 - f.x0 || r.y1 - r.y0 != f.y1 - f.y0) {
      throw Error(ErrorCode::NonAlignedInput, "dissolve inputs must share one square size");
    }
  }

  // Compressed coordinates: only lattice lines that carry an edge matter.
  std::vector<std::int64_t> xs, ys;
  for (const auto& r : rects) {
    xs.push_back(r.x0);
    xs.push_back(r.x1);
    ys.push_back(r.y0);
    ys.push_back(r.y1);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  auto xi = [&](std::int64_t v) { return static_cast<int>(std::lower_bound(xs.begin(), xs.end(), v) - xs.begin()); };
  auto yi = [&](std::int64_t v) { return static_cast<int>(std::lower_bound(ys.begin(), ys.end(), v) - ys.begin()); };

  // 2-D difference array marks covered compressed cells.
  std::vector<int> diff(static_cast<std::size_t>(nx + 1) * (ny + 1), 0);
  auto at = [&](int i, int j) -> int& { return diff[static_cast<std::size_t>(j) * (nx + 1) + i]; };
  for (const auto& r : rects) {
    const int i0 = xi(r.x0), i1 = xi(r.x1), j0 = yi(r.y0), j1 = yi(r.y1);
    at(i0, j0) += 1;
    at(i1, j0) -= 1;
    at(i0, j1) -= 1;
    at(i1, j1) += 1;
  }
  for (int j = 0; j <= ny; ++j) {
    for (int i = 1; i <= nx; ++i) at(i, j) += at(i - 1, j);
  }
  for (int j = 1; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) at(i, j) += at(i, j - 1);
  }

  // 4-connected components, labelled in row-major (south to north) order.
  std::vector<int> comp(static_cast<std::size_t>(nx) * ny, -1);
  auto cell = [&](int i, int j) -> int& { return comp[static_cast<std::size_t>(j) * nx + i]; };
  auto covered = [&](int i, int j) { return i >= 0 && j >= 0 && i < nx && j < ny && at(i, j) > 0; };
  int n_comp = 0;
  std::vector<std::pair<int, int>> stack;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!covered(i, j) || cell(i, j) >= 0) continue;
      cell(i, j) = n_comp;
      stack.assign(1, {i, j});
      while (!stack.empty()) {
        const auto [ci, cj] = stack.back();
        stack.pop_back();
        for (int d = 0; d < 4; ++d) {
          const int ni = ci + kDx[d], nj = cj + kDy[d];
          if (covered(ni, nj) && cell(ni, nj) < 0) {
            cell(ni, nj) = n_comp;
            stack.push_back({ni, nj});
          }
        }
      }
      ++n_comp;
    }
  }

  // Directed boundary edges with the covered cell on the left.
  const int vx = nx + 1;
  auto vid = [&](int i, int j) { return j * vx + i; };
  std::vector<Edge> edges;
  std::vector<std::array<int, 2>> outgoing(static_cast<std::size_t>(vx) * (ny + 1), {-1, -1});
  auto add_edge = [&](int i0, int j0, int i1, int j1, int dir, int c) {
    const int from = vid(i0, j0);
    auto& slot = outgoing[static_cast<std::size_t>(from)];
    slot[slot[0] < 0 ? 0 : 1] = static_cast<int>(edges.size());
    edges.push_back({from, vid(i1, j1), dir, c});
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!covered(i, j)) continue;
      const int c = cell(i, j);
      if (!covered(i, j - 1)) add_edge(i, j, i + 1, j, 0, c);
      if (!covered(i + 1, j)) add_edge(i + 1, j, i + 1, j + 1, 1, c);
      if (!covered(i, j + 1)) add_edge(i + 1, j + 1, i, j + 1, 2, c);
      if (!covered(i - 1, j)) add_edge(i, j + 1, i, j, 3, c);
    }
  }

  auto to_point = [&](int v) {
    const int i = v % vx, j = v / vx;
    return Point{grid.origin_x + static_cast<double>(xs[static_cast<std::size_t>(i)]) * grid.step_x,
                 grid.origin_y + static_cast<double>(ys[static_cast<std::size_t>(j)]) * grid.step_y};
  };

  std::vector<PolygonGeom> parts(static_cast<std::size_t>(n_comp));
  std::vector<std::vector<Ring>> holes(static_cast<std::size_t>(n_comp));
  // Edges were emitted in row-major cell order, so the first unused edge of a
  // ring starts at its lowest-then-leftmost corner.
  for (std::size_t start = 0; start < edges.size(); ++start) {
    if (edges[start].used) continue;
    std::vector<int> verts;
    std::vector<int> dirs;
    int e = static_cast<int>(start);
    while (!edges[static_cast<std::size_t>(e)].used) {
      auto& edge = edges[static_cast<std::size_t>(e)];
      edge.used = true;
      verts.push_back(edge.from);
      dirs.push_back(edge.dir);
      // At a saddle both candidates belong to this component; turning right
      // keeps every ring simple.
      int next = -1;
      for (int turn : {3, 0, 1}) {
        const int want = (edge.dir + turn) % 4;
        for (int cand : outgoing[static_cast<std::size_t>(edge.to)]) {
          if (cand < 0) continue;
          const auto& ce = edges[static_cast<std::size_t>(cand)];
          if (!ce.used && ce.component == edge.component && ce.dir == want) {
            next = cand;
            break;
          }
        }
        if (next >= 0) break;
      }
      if (next < 0) break;
      e = next;
    }

    // Drop vertices in the middle of straight runs.
    Ring ring;
    const std::size_t n = verts.size();
    for (std::size_t k = 0; k < n; ++k) {
      const int prev_dir = dirs[(k + n - 1) % n];
      if (prev_dir != dirs[k]) ring.push_back(to_point(verts[k]));
    }
    ring.push_back(ring.front());
    const int c = edges[start].component;
    if (signed_area(ring) > 0.0) {
      parts[static_cast<std::size_t>(c)].exterior = std::move(ring);
    } else {
      holes[static_cast<std::size_t>(c)].push_back(std::move(ring));
    }
  }
  for (int c = 0; c < n_comp; ++c) parts[static_cast<std::size_t>(c)].holes = std::move(holes[static_cast<std::size_t>(c)]);
  out.parts = std::move(parts);
  return out;
}

}  // namespace settlemap
