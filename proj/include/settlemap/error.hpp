#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace settlemap {

enum class ErrorCode {
  InvalidArgument,
  NonAlignedInput,
  UnsupportedFormat,
  MissingGeoreference,
  RotatedTransform,
  ParseError,
  UnsupportedGeometryType,
  IoError,
  RasterTooSmall,
  CrsMismatch,
  NoPositives,
  OutOfBounds,
  TileTooSmall,
  SingleClassDataset,
  MissingScore,
  MissingTile,
  EmptyMatrix,
  PatchOverflow,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this type; the code is what the CLI reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace settlemap
