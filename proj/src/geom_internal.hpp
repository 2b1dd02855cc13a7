#pragma once

#include <algorithm>

#include "settlemap/geo_core.hpp"

namespace settlemap::detail {

// Crossing of the edge a-b with the horizontal line at y. Shared by
// point_in_polygon and the scanline rasterizer so both see the same bits.
inline double edge_crossing_x(Point a, Point b, double y) {
  return a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
}

inline bool edge_spans(Point a, Point b, double y) { return (a.y > y) != (b.y > y); }

inline double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool on_segment(Point p, Point a, Point b) {
  if (cross(a, b, p) != 0.0) return false;
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline bool in_rect(Point p, const RectFootprint& r) {
  return r.min_x <= p.x && p.x <= r.max_x && r.min_y <= p.y && p.y <= r.max_y;
}

}  // namespace settlemap::detail
