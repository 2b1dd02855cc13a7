#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace settlemap {

// Seeded randomness with a fully specified algorithm so outputs reproduce
// across standard libraries. std::mt19937_64 is pinned by the standard; the
// distributions below are ours because the std:: ones are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound) by rejection of the biased tail.
  std::uint64_t below(std::uint64_t bound);

  // Uniform double in [0, 1) from the top 53 bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Fisher-Yates, walking from the back.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Per-stage seed: mix64(seed ^ fnv1a64(label)). Stages rerun independently
// but reproducibly from one top-level seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

}  // namespace settlemap
