#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace settlemap {

enum class Augmentation { None, H, V, HV };

std::string_view to_string(Augmentation a);
Augmentation parse_augmentation(std::string_view s);  // throws ParseError

// 8-bit RGB, row-major, band-interleaved.
struct TilePixels {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  TilePixels() = default;
  TilePixels(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}
  TilePixels(int w, int h, std::vector<std::uint8_t> d) : width(w), height(h), data(std::move(d)) {}

  std::uint8_t* px(int col, int row) { return &data[(static_cast<std::size_t>(row) * width + col) * 3]; }
  const std::uint8_t* px(int col, int row) const {
    return &data[(static_cast<std::size_t>(row) * width + col) * 3];
  }
  friend bool operator==(const TilePixels&, const TilePixels&) = default;
};

TilePixels flip_horizontal(const TilePixels& t);
TilePixels flip_vertical(const TilePixels& t);
TilePixels apply_augmentation(const TilePixels& t, Augmentation a);

}  // namespace settlemap
