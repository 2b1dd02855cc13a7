#include "settlemap/manifest.hpp"

#include <json.hpp>
#include <sstream>
#include <unordered_set>

#include "io_util.hpp"
#include "settlemap/error.hpp"

namespace settlemap {

using nlohmann::ordered_json;

namespace {
constexpr std::string_view kManifestTag = "settlemap-tiles";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::None:
      return "none";
  }
  return "none";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "none") return Split::None;
  throw Error(ErrorCode::ParseError, "unknown split '" + std::string(s) + "'");
}

std::string format_tile_manifest(const TileManifest& m) {
  ordered_json header;
  header["manifest"] = kManifestTag;
  header["version"] = 1;
  header["source"] = m.source;
  header["raster_width"] = m.raster_width;
  header["raster_height"] = m.raster_height;
  header["tile_size"] = m.tile_size;
  header["stride"] = m.stride;
  header["transform"] = {{"origin_x", m.transform.origin_x},
                         {"origin_y", m.transform.origin_y},
                         {"pixel_w", m.transform.pixel_w},
                         {"pixel_h", m.transform.pixel_h},
                         {"crs", m.transform.crs}};
  std::string out = header.dump() + "\n";
  for (const auto& e : m.entries) {
    ordered_json row;
    row["tile_id"] = e.tile_id;
    row["col_off"] = e.window.col_off;
    row["row_off"] = e.window.row_off;
    row["width"] = e.window.width;
    row["height"] = e.window.height;
    row["label"] = e.label;
    row["split"] = to_string(e.split);
    row["augmentation"] = to_string(e.augmentation);
    row["footprint"] = {e.footprint.min_x, e.footprint.min_y, e.footprint.max_x, e.footprint.max_y};
    out += row.dump();
    out += '\n';
  }
  return out;
}

TileManifest parse_tile_manifest(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::ParseError, "manifest line " + std::to_string(lineno) + ": " + why);
  };
  TileManifest m;
  bool have_header = false;
  std::unordered_set<std::string> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
      if (!have_header) {
        if (j.value("manifest", "") != kManifestTag) throw fail("missing manifest header");
        if (j.at("version").get<int>() != 1) throw fail("unsupported manifest version");
        m.source = j.at("source").get<std::string>();
        m.raster_width = j.at("raster_width").get<int>();
        m.raster_height = j.at("raster_height").get<int>();
        m.tile_size = j.at("tile_size").get<int>();
        m.stride = j.at("stride").get<int>();
        const auto& t = j.at("transform");
        m.transform = {t.at("origin_x").get<double>(), t.at("origin_y").get<double>(), t.at("pixel_w").get<double>(),
                       t.at("pixel_h").get<double>(), t.at("crs").get<std::string>()};
        if (m.raster_width <= 0 || m.raster_height <= 0 || m.tile_size <= 0 || m.stride <= 0) {
          throw fail("raster and tile dimensions must be positive");
        }
        have_header = true;
        continue;
      }
      TileRecord e;
      e.tile_id = j.at("tile_id").get<std::string>();
      e.window = {j.at("col_off").get<int>(), j.at("row_off").get<int>(), j.at("width").get<int>(),
                  j.at("height").get<int>()};
      e.label = j.at("label").get<bool>();
      e.split = parse_split(j.at("split").get<std::string>());
      e.augmentation = parse_augmentation(j.at("augmentation").get<std::string>());
      const auto& fp = j.at("footprint");
      if (!fp.is_array() || fp.size() != 4) throw fail("footprint must be [min_x, min_y, max_x, max_y]");
      e.footprint = {fp[0].get<double>(), fp[1].get<double>(), fp[2].get<double>(), fp[3].get<double>()};
      const auto& w = e.window;
      if (w.col_off < 0 || w.row_off < 0 || w.width <= 0 || w.height <= 0 ||
          static_cast<long long>(w.col_off) + w.width > m.raster_width ||
          static_cast<long long>(w.row_off) + w.height > m.raster_height) {
        throw fail("window of " + e.tile_id + " exceeds the declared raster bounds");
      }
      if (!ids.insert(e.tile_id).second) throw fail("duplicate tile_id " + e.tile_id);
      m.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw fail(ex.what());
    } catch (const Error& ex) {
      if (ex.code() == ErrorCode::ParseError && std::string_view(ex.what()).rfind("manifest line", 0) == 0) throw;
      throw fail(ex.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::ParseError, "manifest is empty");
  return m;
}

void write_tile_manifest(const TileManifest& m, const std::filesystem::path& path) {
  detail::write_file(path, format_tile_manifest(m));
}

TileManifest load_tile_manifest(const std::filesystem::path& path) {
  try {
    return parse_tile_manifest(detail::read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace settlemap
