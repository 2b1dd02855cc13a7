#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "settlemap/geo_core.hpp"

namespace settlemap {

using PropertyValue = std::variant<std::nullptr_t, bool, std::int64_t, double, std::string>;

// Insertion-ordered; writers emit keys in this order.
class Properties {
 public:
  void set(std::string key, PropertyValue value);
  const PropertyValue* find(std::string_view key) const;
  std::optional<double> number(std::string_view key) const;
  const std::vector<std::pair<std::string, PropertyValue>>& items() const { return items_; }
  bool empty() const { return items_.empty(); }
  friend bool operator==(const Properties&, const Properties&) = default;

 private:
  std::vector<std::pair<std::string, PropertyValue>> items_;
};

struct Feature {
  MultiPolygonGeom geometry;
  bool multi = false;  // written back as MultiPolygon when true
  Properties properties;
  friend bool operator==(const Feature&, const Feature&) = default;
};

struct FeatureCollection {
  std::vector<Feature> features;
  std::string crs;  // "EPSG:n" from a legacy "crs" member, empty if absent
};

// Polygon and MultiPolygon features only. Nested property values are kept as
// their compact JSON text.
FeatureCollection parse_feature_collection(std::string_view text);
FeatureCollection load_feature_collection(const std::filesystem::path& path);

// Fixed key order, one feature per line, coordinates at 9 decimals.
std::string format_feature_collection(const FeatureCollection& fc);
void write_feature_collection(const FeatureCollection& fc, const std::filesystem::path& path);

// All polygons of all features, flattened.
std::vector<PolygonGeom> all_polygons(const FeatureCollection& fc);
MultiPolygonGeom merged_geometry(const FeatureCollection& fc);

}  // namespace settlemap
