#include "settlemap/geojson.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "io_util.hpp"
#include "settlemap/error.hpp"

namespace settlemap {

using nlohmann::ordered_json;

void Properties::set(std::string key, PropertyValue value) {
  for (auto& kv : items_) {
    if (kv.first == key) {
      kv.second = std::move(value);
      return;
    }
  }
  items_.emplace_back(std::move(key), std::move(value));
}

const PropertyValue* Properties::find(std::string_view key) const {
  for (const auto& kv : items_) {
    if (kv.first == key) return &kv.second;
  }
  return nullptr;
}

std::optional<double> Properties::number(std::string_view key) const {
  const auto* v = find(key);
  if (!v) return std::nullopt;
  if (const auto* d = std::get_if<double>(v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
  return std::nullopt;
}

namespace {

Error parse_error(const std::string& why) { return Error(ErrorCode::ParseError, "GeoJSON: " + why); }

Ring parse_ring(const ordered_json& j) {
  if (!j.is_array()) throw parse_error("ring must be an array of positions");
  Ring ring;
  ring.reserve(j.size());
  for (const auto& pos : j) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw parse_error("position must be [x, y]");
    }
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  if (!ring_closed(ring)) throw parse_error("linear ring must have >= 4 positions and be closed");
  return ring;
}

PolygonGeom parse_polygon(const ordered_json& j) {
  if (!j.is_array() || j.empty()) throw parse_error("polygon needs at least an exterior ring");
  PolygonGeom p;
  p.exterior = parse_ring(j[0]);
  if (signed_area(p.exterior) == 0.0) throw parse_error("polygon exterior has zero area");
  for (std::size_t k = 1; k < j.size(); ++k) p.holes.push_back(parse_ring(j[k]));
  return p;
}

std::string normalize_crs(const std::string& name) {
  // Accepts "EPSG:n", "urn:ogc:def:crs:EPSG::n" and the OGC CRS84 alias.
  const auto pos = name.rfind("EPSG");
  if (pos != std::string::npos) {
    const auto colon = name.find_last_of(':');
    if (colon != std::string::npos && colon > pos) return "EPSG:" + name.substr(colon + 1);
  }
  if (name.find("CRS84") != std::string::npos) return "EPSG:4326";
  return name;
}

PropertyValue to_property(const ordered_json& v) {
  if (v.is_null()) return nullptr;
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

FeatureCollection parse_feature_collection(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
    throw parse_error("top level must be a FeatureCollection");
  }
  FeatureCollection fc;
  if (doc.contains("crs") && doc["crs"].is_object()) {
    const auto& props = doc["crs"].value("properties", ordered_json::object());
    if (props.contains("name") && props["name"].is_string()) fc.crs = normalize_crs(props["name"].get<std::string>());
  }
  if (!doc.contains("features") || !doc["features"].is_array()) throw parse_error("missing features array");
  for (const auto& f : doc["features"]) {
    if (!f.is_object() || f.value("type", "") != "Feature") throw parse_error("feature entries must be Features");
    if (!f.contains("geometry") || !f["geometry"].is_object()) throw parse_error("feature without geometry");
    const auto& g = f["geometry"];
    const std::string type = g.value("type", "");
    if (!g.contains("coordinates")) throw parse_error("geometry without coordinates");
    Feature feature;
    if (type == "Polygon") {
      feature.geometry.parts.push_back(parse_polygon(g["coordinates"]));
    } else if (type == "MultiPolygon") {
      feature.multi = true;
      if (!g["coordinates"].is_array()) throw parse_error("MultiPolygon coordinates must be an array");
      for (const auto& part : g["coordinates"]) feature.geometry.parts.push_back(parse_polygon(part));
    } else {
      throw Error(ErrorCode::UnsupportedGeometryType, "GeoJSON: unsupported geometry type '" + type + "'");
    }
    if (f.contains("properties") && f["properties"].is_object()) {
      for (const auto& [k, v] : f["properties"].items()) feature.properties.set(k, to_property(v));
    }
    fc.features.push_back(std::move(feature));
  }
  return fc;
}

FeatureCollection load_feature_collection(const std::filesystem::path& path) {
  try {
    return parse_feature_collection(detail::read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

namespace {

void append_coord(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  out += s;
}

void append_ring(std::string& out, const Ring& ring) {
  out += '[';
  for (std::size_t k = 0; k < ring.size(); ++k) {
    if (k) out += ',';
    out += '[';
    append_coord(out, ring[k].x);
    out += ',';
    append_coord(out, ring[k].y);
    out += ']';
  }
  out += ']';
}

void append_polygon(std::string& out, const PolygonGeom& p) {
  out += '[';
  append_ring(out, p.exterior);
  for (const auto& h : p.holes) {
    out += ',';
    append_ring(out, h);
  }
  out += ']';
}

void append_value(std::string& out, const PropertyValue& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::nullptr_t>) {
          out += "null";
        } else if constexpr (std::is_same_v<T, bool>) {
          out += x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          out += std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          out += std::isfinite(x) ? detail::format_roundtrip(x) : "null";
        } else {
          out += ordered_json(x).dump();
        }
      },
      v);
}

}  // namespace

std::string format_feature_collection(const FeatureCollection& fc) {
  std::string out = "{\"type\":\"FeatureCollection\",";
  if (!fc.crs.empty()) {
    out += "\"crs\":{\"type\":\"name\",\"properties\":{\"name\":" + ordered_json(fc.crs).dump() + "}},";
  }
  out += "\"features\":[";
  for (std::size_t k = 0; k < fc.features.size(); ++k) {
    const auto& f = fc.features[k];
    out += k ? ",\n" : "\n";
    out += "{\"type\":\"Feature\",\"properties\":{";
    bool first = true;
    for (const auto& [key, value] : f.properties.items()) {
      if (!first) out += ',';
      first = false;
      out += ordered_json(key).dump();
      out += ':';
      append_value(out, value);
    }
    out += "},\"geometry\":";
    const bool multi = f.multi || f.geometry.parts.size() != 1;
    if (multi) {
      out += "{\"type\":\"MultiPolygon\",\"coordinates\":[";
      for (std::size_t p = 0; p < f.geometry.parts.size(); ++p) {
        if (p) out += ',';
        append_polygon(out, f.geometry.parts[p]);
      }
      out += "]}";
    } else {
      out += "{\"type\":\"Polygon\",\"coordinates\":";
      append_polygon(out, f.geometry.parts[0]);
      out += '}';
    }
    out += '}';
  }
  out += fc.features.empty() ? "]}\n" : "\n]}\n";
  return out;
}

void write_feature_collection(const FeatureCollection& fc, const std::filesystem::path& path) {
  detail::write_file(path, format_feature_collection(fc));
}

std::vector<PolygonGeom> all_polygons(const FeatureCollection& fc) {
  std::vector<PolygonGeom> out;
  for (const auto& f : fc.features) out.insert(out.end(), f.geometry.parts.begin(), f.geometry.parts.end());
  return out;
}

MultiPolygonGeom merged_geometry(const FeatureCollection& fc) { return {all_polygons(fc)}; }

}  // namespace settlemap
