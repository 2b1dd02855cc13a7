#include <limits>

#include "settlemap/error.hpp"
#include "settlemap/rng.hpp"

namespace settlemap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonAlignedInput: return "NonAlignedInput";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::MissingGeoreference: return "MissingGeoreference";
    case ErrorCode::RotatedTransform: return "RotatedTransform";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedGeometryType: return "UnsupportedGeometryType";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::RasterTooSmall: return "RasterTooSmall";
    case ErrorCode::CrsMismatch: return "CrsMismatch";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::TileTooSmall: return "TileTooSmall";
    case ErrorCode::SingleClassDataset: return "SingleClassDataset";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::MissingTile: return "MissingTile";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::PatchOverflow: return "PatchOverflow";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::InvalidArgument, "Rng::below needs a positive bound");
  // Largest multiple of bound that fits; draws at or above it are redrawn.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = next();
  } while (v >= limit);
  return v % bound;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(seed ^ h);
}

}  // namespace settlemap
