#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace settlemap {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

// North-up affine georeference: no rotation or shear terms.
struct GeoTransform {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_w = 1.0;
  double pixel_h = -1.0;
  std::string crs;  // opaque tag, empty when unknown

  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

// Throws InvalidArgument for a zero or non-finite pixel size.
void validate(const GeoTransform& t);

Point pixel_to_geo(const GeoTransform& t, double col, double row);

// Inverse of pixel_to_geo. Results within rounding distance of an integer snap to it so
// integer pixel coordinates round-trip exactly.
Point geo_to_pixel(const GeoTransform& t, double x, double y);

// True when either tag is empty or both are equal.
bool crs_compatible(const std::string& a, const std::string& b);

struct PixelWindow {
  int col_off = 0;
  int row_off = 0;
  int width = 0;
  int height = 0;
  friend bool operator==(const PixelWindow&, const PixelWindow&) = default;
};

struct RectFootprint {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
  bool valid() const { return min_x < max_x && min_y < max_y; }
  friend bool operator==(const RectFootprint&, const RectFootprint&) = default;
};

bool rects_touch(const RectFootprint& a, const RectFootprint& b);

using Ring = std::vector<Point>;

struct PolygonGeom {
  Ring exterior;
  std::vector<Ring> holes;
  friend bool operator==(const PolygonGeom&, const PolygonGeom&) = default;
};

struct MultiPolygonGeom {
  std::vector<PolygonGeom> parts;
  friend bool operator==(const MultiPolygonGeom&, const MultiPolygonGeom&) = default;
};

// Closed ring: at least 4 points, first == last.
bool ring_closed(const Ring& ring);
void validate(const PolygonGeom& p);

// Shoelace over a closed ring; positive for counter-clockwise.
double signed_area(const Ring& ring);
double area(const PolygonGeom& p);
double area(const MultiPolygonGeom& m);

RectFootprint bounds(const Ring& ring);
RectFootprint bounds(const PolygonGeom& p);
RectFootprint bounds(const MultiPolygonGeom& m);

RectFootprint window_footprint(const GeoTransform& t, const PixelWindow& w);
PolygonGeom to_polygon(const RectFootprint& r);

// Even-odd over exterior and holes. Points on any ring edge count as inside.
bool point_in_polygon(Point pt, const PolygonGeom& p);
bool point_in_multipolygon(Point pt, const MultiPolygonGeom& m);

// True iff the closed rectangle and the closed polygon share any point.
bool rect_intersects_polygon(const RectFootprint& r, const PolygonGeom& p);

// Lattice that every dissolve input edge lies on: x = origin_x + k*step_x,
// y = origin_y + k*step_y for integer k.
struct SquareGrid {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double step_x = 1.0;
  double step_y = 1.0;
};

// Union of same-size, lattice-aligned squares traced into polygons with
// holes. One part per 4-connected component of covered lattice cells,
// exteriors counter-clockwise, holes clockwise.
MultiPolygonGeom rectilinear_union(std::span<const RectFootprint> squares, const SquareGrid& grid);

// Row-major width x height mask.
struct BitMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BitMask() = default;
  BitMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int col, int row) const { return bits[static_cast<std::size_t>(row) * width + col] != 0; }
  void set(int col, int row, bool v = true) {
    bits[static_cast<std::size_t>(row) * width + col] = v ? 1 : 0;
  }
  std::size_t count() const;
  friend bool operator==(const BitMask&, const BitMask&) = default;
};

// mask(c, r) = point_in_multipolygon(pixel_to_geo(c + 0.5, r + 0.5)).
// Runs the parallel scanline kernel.
BitMask rasterize_polygons(const MultiPolygonGeom& geoms, const GeoTransform& t, int width, int height);

}  // namespace settlemap
