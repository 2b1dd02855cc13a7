#include "settlemap/geo_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geom_internal.hpp"
#include "settlemap/error.hpp"
#include "settlemap/kernels.hpp"

namespace settlemap {

using detail::cross;
using detail::on_segment;

void validate(const GeoTransform& t) {
  if (!(std::isfinite(t.pixel_w) && std::isfinite(t.pixel_h) && t.pixel_w != 0.0 && t.pixel_h != 0.0 &&
        std::isfinite(t.origin_x) && std::isfinite(t.origin_y))) {
    throw Error(ErrorCode::InvalidArgument, "geotransform needs finite, nonzero pixel sizes");
  }
}

Point pixel_to_geo(const GeoTransform& t, double col, double row) {
  return {t.origin_x + col * t.pixel_w, t.origin_y + row * t.pixel_h};
}

namespace {

// Tolerance scales with the rounding error of the geo coordinate.
double snap(double v, double geo, double origin, double size) {
  const double r = std::round(v);
  const double tol = std::max(1e-9, 8 * std::numeric_limits<double>::epsilon() * (std::abs(geo) + std::abs(origin)) /
                                        std::abs(size));
  return std::abs(v - r) <= tol ? r : v;
}

}  // namespace

Point geo_to_pixel(const GeoTransform& t, double x, double y) {
  return {snap((x - t.origin_x) / t.pixel_w, x, t.origin_x, t.pixel_w),
          snap((y - t.origin_y) / t.pixel_h, y, t.origin_y, t.pixel_h)};
}

bool crs_compatible(const std::string& a, const std::string& b) {
  return a.empty() || b.empty() || a == b;
}

bool rects_touch(const RectFootprint& a, const RectFootprint& b) {
  return a.min_x <= b.max_x && b.min_x <= a.max_x && a.min_y <= b.max_y && b.min_y <= a.max_y;
}

bool ring_closed(const Ring& ring) { return ring.size() >= 4 && ring.front() == ring.back(); }

void validate(const PolygonGeom& p) {
  if (!ring_closed(p.exterior)) throw Error(ErrorCode::InvalidArgument, "exterior ring is not closed");
  if (signed_area(p.exterior) == 0.0) throw Error(ErrorCode::InvalidArgument, "exterior ring has zero area");
  for (const auto& h : p.holes) {
    if (!ring_closed(h)) throw Error(ErrorCode::InvalidArgument, "hole ring is not closed");
  }
}

double signed_area(const Ring& ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    twice += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  }
  return twice / 2.0;
}

double area(const PolygonGeom& p) {
  double a = std::abs(signed_area(p.exterior));
  for (const auto& h : p.holes) a -= std::abs(signed_area(h));
  return a;
}

double area(const MultiPolygonGeom& m) {
  double a = 0.0;
  for (const auto& p : m.parts) a += area(p);
  return a;
}

RectFootprint bounds(const Ring& ring) {
  RectFootprint r{HUGE_VAL, HUGE_VAL, -HUGE_VAL, -HUGE_VAL};
  for (const auto& pt : ring) {
    r.min_x = std::min(r.min_x, pt.x);
    r.min_y = std::min(r.min_y, pt.y);
    r.max_x = std::max(r.max_x, pt.x);
    r.max_y = std::max(r.max_y, pt.y);
  }
  return r;
}

RectFootprint bounds(const PolygonGeom& p) { return bounds(p.exterior); }

RectFootprint bounds(const MultiPolygonGeom& m) {
  RectFootprint r{HUGE_VAL, HUGE_VAL, -HUGE_VAL, -HUGE_VAL};
  for (const auto& part : m.parts) {
    const auto b = bounds(part);
    r.min_x = std::min(r.min_x, b.min_x);
    r.min_y = std::min(r.min_y, b.min_y);
    r.max_x = std::max(r.max_x, b.max_x);
    r.max_y = std::max(r.max_y, b.max_y);
  }
  return r;
}

RectFootprint window_footprint(const GeoTransform& t, const PixelWindow& w) {
  const Point a = pixel_to_geo(t, w.col_off, w.row_off);
  const Point b = pixel_to_geo(t, w.col_off + w.width, w.row_off + w.height);
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)};
}

PolygonGeom to_polygon(const RectFootprint& r) {
  return {{{r.min_x, r.min_y}, {r.max_x, r.min_y}, {r.max_x, r.max_y}, {r.min_x, r.max_y}, {r.min_x, r.min_y}},
          {}};
}

namespace {

// Returns true if pt lies on the ring; otherwise flips `inside` once per
// half-open crossing to the right of pt.
bool scan_ring(Point pt, const Ring& ring, bool& inside) {
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const Point a = ring[i];
    const Point b = ring[i + 1];
    if (on_segment(pt, a, b)) return true;
    if (detail::edge_spans(a, b, pt.y) && pt.x < detail::edge_crossing_x(a, b, pt.y)) inside = !inside;
  }
  return false;
}

int orientation(Point a, Point b, Point c) {
  const double v = cross(a, b, c);
  return (v > 0.0) - (v < 0.0);
}

bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && on_segment(q1, p1, p2)) || (o2 == 0 && on_segment(q2, p1, p2)) ||
         (o3 == 0 && on_segment(p1, q1, q2)) || (o4 == 0 && on_segment(p2, q1, q2));
}

bool segment_touches_rect(Point a, Point b, const RectFootprint& r) {
  if (detail::in_rect(a, r) || detail::in_rect(b, r)) return true;
  if (std::max(a.x, b.x) < r.min_x || std::min(a.x, b.x) > r.max_x || std::max(a.y, b.y) < r.min_y ||
      std::min(a.y, b.y) > r.max_y) {
    return false;
  }
  const Point c0{r.min_x, r.min_y}, c1{r.max_x, r.min_y}, c2{r.max_x, r.max_y}, c3{r.min_x, r.max_y};
  return segments_intersect(a, b, c0, c1) || segments_intersect(a, b, c1, c2) ||
         segments_intersect(a, b, c2, c3) || segments_intersect(a, b, c3, c0);
}

bool ring_touches_rect(const Ring& ring, const RectFootprint& r) {
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    if (segment_touches_rect(ring[i], ring[i + 1], r)) return true;
  }
  return false;
}

}  // namespace

bool point_in_polygon(Point pt, const PolygonGeom& p) {
  bool inside = false;
  if (scan_ring(pt, p.exterior, inside)) return true;
  for (const auto& h : p.holes) {
    if (scan_ring(pt, h, inside)) return true;
  }
  return inside;
}

bool point_in_multipolygon(Point pt, const MultiPolygonGeom& m) {
  return std::any_of(m.parts.begin(), m.parts.end(), [&](const PolygonGeom& p) { return point_in_polygon(pt, p); });
}

bool rect_intersects_polygon(const RectFootprint& r, const PolygonGeom& p) {
  if (!rects_touch(r, bounds(p.exterior))) return false;
  if (ring_touches_rect(p.exterior, r)) return true;
  for (const auto& h : p.holes) {
    if (ring_touches_rect(h, r)) return true;
  }
  // No boundary meets the rectangle, so it lies wholly inside one face.
  return point_in_polygon({r.min_x, r.min_y}, p);
}

std::size_t BitMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

BitMask rasterize_polygons(const MultiPolygonGeom& geoms, const GeoTransform& t, int width, int height) {
  return kernels::rasterize(geoms, t, width, height);
}

}  // namespace settlemap
