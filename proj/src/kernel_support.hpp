#pragma once

#include <cstdint>
#include <exception>
#include <string>
#include <unordered_map>
#include <span>

#include "settlemap/error.hpp"
#include "settlemap/kernels.hpp"

namespace settlemap::detail {

inline std::uint64_t grid_key(std::int64_t i, std::int64_t j) {
  return (static_cast<std::uint64_t>(i) << 32) ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(j));
}

inline std::unordered_map<std::uint64_t, double> index_cells(std::span<const GridValue> cells) {
  std::unordered_map<std::uint64_t, double> map;
  map.reserve(cells.size() * 2);
  for (const auto& c : cells) {
    if (!map.emplace(grid_key(c.i, c.j), c.value).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate grid cell (" + std::to_string(c.i) + ", " + std::to_string(c.j) + ")");
    }
  }
  return map;
}

// Keeps the exception of the lowest failing index so a parallel loop fails
// the same way a serial one would.
class FirstError {
 public:
  void record(std::size_t index, std::exception_ptr e) {
#pragma omp critical(settlemap_first_error)
    {
      if (!error_ || index < index_) {
        error_ = e;
        index_ = index;
      }
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
  std::size_t index_ = 0;
};

}  // namespace settlemap::detail
