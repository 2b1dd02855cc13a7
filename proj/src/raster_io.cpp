#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "io_util.hpp"
#include "settlemap/error.hpp"
#include "settlemap/raster.hpp"

namespace settlemap {

namespace {

enum Tag : std::uint16_t {
  kImageWidth = 256,
  kImageLength = 257,
  kBitsPerSample = 258,
  kCompression = 259,
  kPhotometric = 262,
  kStripOffsets = 273,
  kSamplesPerPixel = 277,
  kRowsPerStrip = 278,
  kStripByteCounts = 279,
  kPlanarConfig = 284,
  kPredictor = 317,
  kTileWidth = 322,
  kTileLength = 323,
  kTileOffsets = 324,
  kTileByteCounts = 325,
  kSampleFormat = 339,
  kModelPixelScale = 33550,
  kModelTiepoint = 33922,
  kModelTransformation = 34264,
  kGeoKeyDirectory = 34735,
};

constexpr std::uint16_t kGtRasterTypeKey = 1025;
constexpr std::uint16_t kGeographicTypeKey = 2048;
constexpr std::uint16_t kProjectedCsTypeKey = 3072;

Error unsupported(const std::string& path, const std::string& why) {
  return Error(ErrorCode::UnsupportedFormat, path + ": " + why);
}

class TiffReader {
 public:
  TiffReader(std::string bytes, std::string name) : buf_(std::move(bytes)), name_(std::move(name)) {
    if (buf_.size() < 8) throw unsupported(name_, "truncated TIFF header");
    if (buf_[0] == 'I' && buf_[1] == 'I') {
      little_ = true;
    } else if (buf_[0] == 'M' && buf_[1] == 'M') {
      little_ = false;
    } else {
      throw unsupported(name_, "not a TIFF file");
    }
    const auto magic = u16(2);
    if (magic == 43) throw unsupported(name_, "BigTIFF is not supported");
    if (magic != 42) throw unsupported(name_, "bad TIFF magic");
    read_ifd(u32(4));
  }

  bool has(std::uint16_t tag) const { return entries_.count(tag) != 0; }

  std::vector<double> values(std::uint16_t tag) const {
    const auto it = entries_.find(tag);
    if (it == entries_.end()) return {};
    const Entry& e = it->second;
    const std::size_t size = type_size(e.type);
    const std::size_t total = size * e.count;
    const std::size_t base = total <= 4 ? e.entry_pos + 8 : u32(e.entry_pos + 8);
    if (base + total > buf_.size()) throw unsupported(name_, "tag data out of range");
    std::vector<double> out;
    out.reserve(e.count);
    for (std::size_t k = 0; k < e.count; ++k) {
      const std::size_t p = base + k * size;
      switch (e.type) {
        case 1:
        case 7:
          out.push_back(static_cast<unsigned char>(buf_[p]));
          break;
        case 3:
          out.push_back(u16(p));
          break;
        case 4:
          out.push_back(u32(p));
          break;
        case 5:
          out.push_back(static_cast<double>(u32(p)) / static_cast<double>(u32(p + 4)));
          break;
        case 12: {
          const std::uint64_t bits = u64(p);
          double d;
          std::memcpy(&d, &bits, sizeof d);
          out.push_back(d);
          break;
        }
        default:
          throw unsupported(name_, "tag " + std::to_string(tag) + " has unsupported type");
      }
    }
    return out;
  }

  std::optional<double> scalar(std::uint16_t tag) const {
    auto v = values(tag);
    if (v.empty()) return std::nullopt;
    return v[0];
  }

  double required(std::uint16_t tag) const {
    auto v = scalar(tag);
    if (!v) throw unsupported(name_, "missing required tag " + std::to_string(tag));
    return *v;
  }

  std::string_view bytes(std::size_t offset, std::size_t count) const {
    if (offset + count > buf_.size()) throw unsupported(name_, "image data out of range");
    return std::string_view(buf_).substr(offset, count);
  }

 private:
  struct Entry {
    std::uint16_t type;
    std::uint32_t count;
    std::size_t entry_pos;
  };

  static std::size_t type_size(std::uint16_t type) {
    switch (type) {
      case 1:
      case 2:
      case 6:
      case 7:
        return 1;
      case 3:
      case 8:
        return 2;
      case 4:
      case 9:
      case 11:
        return 4;
      case 5:
      case 10:
      case 12:
        return 8;
      default:
        return 1;
    }
  }

  std::uint64_t uint_at(std::size_t pos, int n) const {
    if (pos + static_cast<std::size_t>(n) > buf_.size()) throw unsupported(name_, "truncated TIFF");
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) {
      const auto byte = static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos + static_cast<std::size_t>(k)]));
      v |= little_ ? byte << (8 * k) : byte << (8 * (n - 1 - k));
    }
    return v;
  }
  std::uint16_t u16(std::size_t p) const { return static_cast<std::uint16_t>(uint_at(p, 2)); }
  std::uint32_t u32(std::size_t p) const { return static_cast<std::uint32_t>(uint_at(p, 4)); }
  std::uint64_t u64(std::size_t p) const { return uint_at(p, 8); }

  void read_ifd(std::size_t offset) {
    const std::size_t n = u16(offset);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t pos = offset + 2 + 12 * k;
      entries_[u16(pos)] = Entry{u16(pos + 2), u32(pos + 4), pos};
    }
  }

  std::string buf_;
  std::string name_;
  bool little_ = true;
  std::map<std::uint16_t, Entry> entries_;
};

std::vector<std::uint8_t> inflate_chunk(std::string_view src, std::size_t expected, const std::string& name) {
  std::vector<std::uint8_t> out(expected);
  uLongf out_len = static_cast<uLongf>(expected);
  const int rc = uncompress(out.data(), &out_len, reinterpret_cast<const Bytef*>(src.data()),
                            static_cast<uLong>(src.size()));
  if (rc != Z_OK && rc != Z_BUF_ERROR) throw unsupported(name, "corrupt deflate data");
  if (out_len < expected) throw unsupported(name, "deflate chunk shorter than expected");
  return out;
}

void undo_predictor(std::vector<std::uint8_t>& chunk, int width, int rows) {
  for (int r = 0; r < rows; ++r) {
    std::uint8_t* row = chunk.data() + static_cast<std::size_t>(r) * width * 3;
    for (int c = 3; c < width * 3; ++c) row[c] = static_cast<std::uint8_t>(row[c] + row[c - 3]);
  }
}

struct GeoInfo {
  std::optional<GeoTransform> transform;
};

std::string epsg_tag(int code) { return "EPSG:" + std::to_string(code); }

GeoInfo read_geotiff_tags(const TiffReader& tiff, const std::string& name) {
  GeoInfo info;
  std::string crs;
  bool pixel_is_point = false;
  const auto keys = tiff.values(kGeoKeyDirectory);
  if (keys.size() >= 4) {
    const auto n = static_cast<std::size_t>(keys[3]);
    int projected = 0, geographic = 0;
    for (std::size_t k = 0; k < n && 4 + 4 * k + 3 < keys.size(); ++k) {
      const auto id = static_cast<std::uint16_t>(keys[4 + 4 * k]);
      const auto location = keys[4 + 4 * k + 1];
      const auto value = static_cast<int>(keys[4 + 4 * k + 3]);
      if (location != 0) continue;
      if (id == kGtRasterTypeKey) pixel_is_point = value == 2;
      if (id == kProjectedCsTypeKey) projected = value;
      if (id == kGeographicTypeKey) geographic = value;
    }
    if (projected > 0 && projected != 32767) {
      crs = epsg_tag(projected);
    } else if (geographic > 0 && geographic != 32767) {
      crs = epsg_tag(geographic);
    }
  }

  const auto matrix = tiff.values(kModelTransformation);
  const auto scale = tiff.values(kModelPixelScale);
  const auto ties = tiff.values(kModelTiepoint);
  GeoTransform t;
  t.crs = crs;
  if (matrix.size() == 16) {
    if (matrix[1] != 0.0 || matrix[4] != 0.0) {
      throw Error(ErrorCode::RotatedTransform, name + ": rotated or sheared model transformation");
    }
    t.pixel_w = matrix[0];
    t.pixel_h = matrix[5];
    t.origin_x = matrix[3];
    t.origin_y = matrix[7];
  } else if (scale.size() >= 2 && ties.size() >= 6) {
    if (ties.size() > 6) throw unsupported(name, "multiple tiepoints are not supported");
    t.pixel_w = scale[0];
    t.pixel_h = -scale[1];
    t.origin_x = ties[3] - ties[0] * scale[0];
    t.origin_y = ties[4] + ties[1] * scale[1];
  } else {
    return info;
  }
  if (pixel_is_point) {
    t.origin_x -= t.pixel_w / 2.0;
    t.origin_y -= t.pixel_h / 2.0;
  }
  validate(t);
  info.transform = t;
  return info;
}

RasterImage decode_tiff(std::string bytes, const std::string& name, GeoInfo& geo) {
  TiffReader tiff(std::move(bytes), name);
  const int width = static_cast<int>(tiff.required(kImageWidth));
  const int height = static_cast<int>(tiff.required(kImageLength));
  if (width <= 0 || height <= 0) throw unsupported(name, "empty image");
  const auto spp = tiff.scalar(kSamplesPerPixel).value_or(1);
  if (spp != 3) throw unsupported(name, "only 3-band RGB is supported");
  for (double b : tiff.values(kBitsPerSample)) {
    if (b != 8) throw unsupported(name, "only 8-bit samples are supported");
  }
  if (!tiff.has(kBitsPerSample)) throw unsupported(name, "only 8-bit samples are supported");
  if (tiff.scalar(kPhotometric).value_or(2) != 2) throw unsupported(name, "photometric interpretation must be RGB");
  if (tiff.scalar(kPlanarConfig).value_or(1) != 1) throw unsupported(name, "planar separation is not supported");
  if (tiff.scalar(kSampleFormat).value_or(1) != 1) throw unsupported(name, "samples must be unsigned integers");
  const auto compression = static_cast<int>(tiff.scalar(kCompression).value_or(1));
  if (compression != 1 && compression != 8 && compression != 32946) {
    throw unsupported(name, "compression " + std::to_string(compression) + " is not supported");
  }
  const auto predictor = static_cast<int>(tiff.scalar(kPredictor).value_or(1));
  if (predictor != 1 && predictor != 2) throw unsupported(name, "only predictor 1 or 2 is supported");

  geo = read_geotiff_tags(tiff, name);

  RasterImage img(width, height, GeoTransform{});
  auto load_chunk = [&](double offset, double count, int chunk_w, int chunk_h) {
    const std::size_t expected = static_cast<std::size_t>(chunk_w) * chunk_h * 3;
    const auto raw = tiff.bytes(static_cast<std::size_t>(offset), static_cast<std::size_t>(count));
    std::vector<std::uint8_t> chunk;
    if (compression == 1) {
      if (raw.size() < expected) throw unsupported(name, "strip or tile shorter than expected");
      chunk.assign(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(expected));
    } else {
      chunk = inflate_chunk(raw, expected, name);
    }
    if (predictor == 2) undo_predictor(chunk, chunk_w, chunk_h);
    return chunk;
  };

  if (tiff.has(kTileOffsets)) {
    const int tw = static_cast<int>(tiff.required(kTileWidth));
    const int th = static_cast<int>(tiff.required(kTileLength));
    if (tw <= 0 || th <= 0) throw unsupported(name, "bad tile size");
    const auto offsets = tiff.values(kTileOffsets);
    const auto counts = tiff.values(kTileByteCounts);
    const int across = (width + tw - 1) / tw;
    const int down = (height + th - 1) / th;
    if (offsets.size() < static_cast<std::size_t>(across) * down || counts.size() < offsets.size()) {
      throw unsupported(name, "tile table is incomplete");
    }
    for (int ty = 0; ty < down; ++ty) {
      for (int tx = 0; tx < across; ++tx) {
        const auto k = static_cast<std::size_t>(ty) * across + tx;
        const auto chunk = load_chunk(offsets[k], counts[k], tw, th);
        for (int r = 0; r < th && ty * th + r < height; ++r) {
          const int cols = std::min(tw, width - tx * tw);
          std::memcpy(img.px(tx * tw, ty * th + r), chunk.data() + static_cast<std::size_t>(r) * tw * 3,
                      static_cast<std::size_t>(cols) * 3);
        }
      }
    }
  } else {
    const auto offsets = tiff.values(kStripOffsets);
    const auto counts = tiff.values(kStripByteCounts);
    if (offsets.empty() || counts.size() < offsets.size()) throw unsupported(name, "strip table is incomplete");
    const int rps = std::min(height, static_cast<int>(tiff.scalar(kRowsPerStrip).value_or(height)));
    if (rps <= 0) throw unsupported(name, "bad RowsPerStrip");
    const int strips = (height + rps - 1) / rps;
    if (offsets.size() < static_cast<std::size_t>(strips)) throw unsupported(name, "strip table is incomplete");
    for (int s = 0; s < strips; ++s) {
      const int rows = std::min(rps, height - s * rps);
      const auto chunk = load_chunk(offsets[static_cast<std::size_t>(s)], counts[static_cast<std::size_t>(s)], width, rows);
      std::memcpy(img.px(0, s * rps), chunk.data(), chunk.size());
    }
  }
  return img;
}

RasterImage decode_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw unsupported(path.string(), std::string("PNG decode failed: ") + image.message);
  }
  if (image.format != PNG_FORMAT_RGB) {
    png_image_free(&image);
    throw unsupported(path.string(), "only 8-bit RGB PNG is supported");
  }
  RasterImage img(static_cast<int>(image.width), static_cast<int>(image.height), GeoTransform{});
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
    throw unsupported(path.string(), std::string("PNG decode failed: ") + image.message);
  }
  return img;
}

std::optional<GeoTransform> read_sidecar(const std::filesystem::path& path, bool is_png) {
  std::vector<std::string> exts{".wld"};
  if (is_png) {
    exts.insert(exts.end(), {".pgw", ".pngw"});
  } else {
    exts.insert(exts.end(), {".tfw", ".tifw"});
  }
  for (const auto& ext : exts) {
    auto candidate = path;
    candidate.replace_extension(ext);
    if (std::filesystem::exists(candidate)) return parse_world_file(detail::read_file(candidate));
  }
  return std::nullopt;
}

}  // namespace

GeoTransform parse_world_file(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::array<double, 6> v{};
  for (auto& x : v) {
    std::string tok;
    if (!(in >> tok) || !detail::parse_double(tok, x)) {
      throw Error(ErrorCode::ParseError, "world file needs six numeric lines");
    }
  }
  if (v[1] != 0.0 || v[2] != 0.0) throw Error(ErrorCode::RotatedTransform, "world file has rotation terms");
  GeoTransform t;
  t.pixel_w = v[0];
  t.pixel_h = v[3];
  t.origin_x = v[4] - v[0] / 2.0;
  t.origin_y = v[5] - v[3] / 2.0;
  validate(t);
  return t;
}

RasterImage load_raster(const std::filesystem::path& path) {
  std::string bytes = detail::read_file(path);
  const bool is_png = bytes.size() >= 8 && std::memcmp(bytes.data(), "\x89PNG\r\n\x1a\n", 8) == 0;
  RasterImage img;
  GeoInfo geo;
  if (is_png) {
    img = decode_png(path);
  } else {
    img = decode_tiff(std::move(bytes), path.string(), geo);
  }
  if (geo.transform) {
    img.transform = *geo.transform;
  } else if (auto side = read_sidecar(path, is_png)) {
    img.transform = *side;
  } else {
    throw Error(ErrorCode::MissingGeoreference, path.string() + ": no georeferencing tags or world file");
  }
  return img;
}

namespace {

class TiffBuilder {
 public:
  void put16(std::uint16_t v) {
    out_.push_back(static_cast<char>(v & 0xff));
    out_.push_back(static_cast<char>(v >> 8));
  }
  void put32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void put64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void pad() {
    if (out_.size() % 2) out_.push_back('\0');
  }
  std::size_t size() const { return out_.size(); }
  void append(const std::vector<std::uint8_t>& b) { out_.append(b.begin(), b.end()); }
  void patch32(std::size_t pos, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_[pos + static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xff);
  }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

struct OutTag {
  std::uint16_t tag;
  std::uint16_t type;
  std::vector<std::uint64_t> ints;  // SHORT/LONG payload
  std::vector<double> doubles;      // DOUBLE payload
};

std::vector<std::uint8_t> encode_chunk(std::vector<std::uint8_t> chunk, int width, int rows,
                                       const TiffWriteOptions& opts) {
  if (opts.horizontal_predictor) {
    for (int r = 0; r < rows; ++r) {
      std::uint8_t* row = chunk.data() + static_cast<std::size_t>(r) * width * 3;
      for (int c = width * 3 - 1; c >= 3; --c) row[c] = static_cast<std::uint8_t>(row[c] - row[c - 3]);
    }
  }
  if (!opts.deflate) return chunk;
  uLongf len = compressBound(static_cast<uLong>(chunk.size()));
  std::vector<std::uint8_t> out(len);
  if (compress2(out.data(), &len, chunk.data(), static_cast<uLong>(chunk.size()), 6) != Z_OK) {
    throw Error(ErrorCode::IoError, "deflate failed");
  }
  out.resize(len);
  return out;
}

}  // namespace

void write_geotiff(const RasterImage& image, const std::filesystem::path& path, const TiffWriteOptions& opts) {
  if (image.width <= 0 || image.height <= 0) throw Error(ErrorCode::InvalidArgument, "empty raster");
  if (opts.tile_size < 0 || opts.tile_size % 16 != 0) {
    throw Error(ErrorCode::InvalidArgument, "TIFF tile size must be a multiple of 16");
  }
  TiffBuilder b;
  b.str() = "II";
  b.put16(42);
  b.put32(0);  // IFD offset, patched below

  std::vector<std::uint64_t> offsets, counts;
  const bool tiled = opts.tile_size > 0;
  if (tiled) {
    const int ts = opts.tile_size;
    for (int ty = 0; ty < (image.height + ts - 1) / ts; ++ty) {
      for (int tx = 0; tx < (image.width + ts - 1) / ts; ++tx) {
        std::vector<std::uint8_t> chunk(static_cast<std::size_t>(ts) * ts * 3, 0);
        for (int r = 0; r < ts && ty * ts + r < image.height; ++r) {
          const int cols = std::min(ts, image.width - tx * ts);
          std::memcpy(chunk.data() + static_cast<std::size_t>(r) * ts * 3, image.px(tx * ts, ty * ts + r),
                      static_cast<std::size_t>(cols) * 3);
        }
        const auto enc = encode_chunk(std::move(chunk), ts, ts, opts);
        offsets.push_back(b.size());
        counts.push_back(enc.size());
        b.append(enc);
        b.pad();
      }
    }
  } else {
    const int rps = std::max(1, std::min(opts.rows_per_strip, image.height));
    for (int row = 0; row < image.height; row += rps) {
      const int rows = std::min(rps, image.height - row);
      std::vector<std::uint8_t> chunk(image.px(0, row), image.px(0, row) + static_cast<std::size_t>(rows) * image.width * 3);
      const auto enc = encode_chunk(std::move(chunk), image.width, rows, opts);
      offsets.push_back(b.size());
      counts.push_back(enc.size());
      b.append(enc);
      b.pad();
    }
  }

  constexpr std::uint16_t kShort = 3, kLong = 4, kDouble = 12;
  std::vector<OutTag> tags;
  auto u32 = [](auto v) { return static_cast<std::uint64_t>(v); };
  tags.push_back({kImageWidth, kLong, {u32(image.width)}, {}});
  tags.push_back({kImageLength, kLong, {u32(image.height)}, {}});
  tags.push_back({kBitsPerSample, kShort, {8, 8, 8}, {}});
  tags.push_back({kCompression, kShort, {opts.deflate ? 8u : 1u}, {}});
  tags.push_back({kPhotometric, kShort, {2}, {}});
  if (!tiled) tags.push_back({kStripOffsets, kLong, offsets, {}});
  tags.push_back({kSamplesPerPixel, kShort, {3}, {}});
  if (!tiled) {
    tags.push_back({kRowsPerStrip, kLong, {u32(std::max(1, std::min(opts.rows_per_strip, image.height)))}, {}});
    tags.push_back({kStripByteCounts, kLong, counts, {}});
  }
  tags.push_back({kPlanarConfig, kShort, {1}, {}});
  if (opts.horizontal_predictor) tags.push_back({kPredictor, kShort, {2}, {}});
  if (tiled) {
    tags.push_back({kTileWidth, kLong, {u32(opts.tile_size)}, {}});
    tags.push_back({kTileLength, kLong, {u32(opts.tile_size)}, {}});
    tags.push_back({kTileOffsets, kLong, offsets, {}});
    tags.push_back({kTileByteCounts, kLong, counts, {}});
  }
  tags.push_back({kSampleFormat, kShort, {1, 1, 1}, {}});
  if (opts.georeference) {
    const auto& t = image.transform;
    validate(t);
    if (t.pixel_w <= 0.0 || t.pixel_h >= 0.0) {
      throw Error(ErrorCode::InvalidArgument, "GeoTIFF output needs a north-up transform");
    }
    tags.push_back({kModelPixelScale, kDouble, {}, {t.pixel_w, -t.pixel_h, 0.0}});
    tags.push_back({kModelTiepoint, kDouble, {}, {0.0, 0.0, 0.0, t.origin_x, t.origin_y, 0.0}});
    int code = 0;
    if (t.crs.rfind("EPSG:", 0) == 0) code = std::atoi(t.crs.c_str() + 5);
    std::vector<std::uint64_t> keys{1, 1, 0, 0};
    const auto add_key = [&keys](std::uint64_t id, std::uint64_t value) {
      keys.push_back(id);
      keys.push_back(0);
      keys.push_back(1);
      keys.push_back(value);
    };
    if (code > 0) {
      const bool geographic = code >= 4000 && code < 5000;
      add_key(1024, geographic ? 2u : 1u);
      add_key(kGtRasterTypeKey, 1);
      add_key(geographic ? kGeographicTypeKey : kProjectedCsTypeKey, u32(code));
    } else {
      add_key(kGtRasterTypeKey, 1);
    }
    keys[3] = (keys.size() - 4) / 4;
    tags.push_back({kGeoKeyDirectory, kShort, keys, {}});
  }

  // Out-of-line payloads go after the IFD.
  const std::size_t ifd_pos = b.size();
  b.patch32(4, static_cast<std::uint32_t>(ifd_pos));
  std::size_t extra = ifd_pos + 2 + 12 * tags.size() + 4;
  std::vector<std::size_t> extra_pos(tags.size(), 0);
  for (std::size_t k = 0; k < tags.size(); ++k) {
    const auto& t = tags[k];
    const std::size_t bytes = t.type == kDouble ? 8 * t.doubles.size() : (t.type == kShort ? 2 : 4) * t.ints.size();
    if (bytes > 4) {
      extra_pos[k] = extra;
      extra += bytes + (bytes % 2);
    }
  }
  b.put16(static_cast<std::uint16_t>(tags.size()));
  for (std::size_t k = 0; k < tags.size(); ++k) {
    const auto& t = tags[k];
    const std::size_t n = t.type == kDouble ? t.doubles.size() : t.ints.size();
    b.put16(t.tag);
    b.put16(t.type);
    b.put32(static_cast<std::uint32_t>(n));
    if (extra_pos[k] != 0) {
      b.put32(static_cast<std::uint32_t>(extra_pos[k]));
    } else if (t.type == kShort) {
      b.put16(static_cast<std::uint16_t>(t.ints[0]));
      b.put16(n > 1 ? static_cast<std::uint16_t>(t.ints[1]) : 0);
    } else {
      b.put32(static_cast<std::uint32_t>(t.ints[0]));
    }
  }
  b.put32(0);
  for (std::size_t k = 0; k < tags.size(); ++k) {
    if (extra_pos[k] == 0) continue;
    const auto& t = tags[k];
    if (t.type == kDouble) {
      for (double d : t.doubles) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof bits);
        b.put64(bits);
      }
    } else {
      for (auto v : t.ints) t.type == kShort ? b.put16(static_cast<std::uint16_t>(v)) : b.put32(static_cast<std::uint32_t>(v));
    }
    b.pad();
  }
  detail::write_file(path, b.str());
}

void write_png(const RasterImage& image, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, "cannot write PNG " + path.string());
  }
}

}  // namespace settlemap
