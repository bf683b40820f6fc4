#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace edist {

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of the independent substream `index` under `parent`. Substreams with
/// distinct (parent, index) pairs are statistically independent.
std::uint64_t substream(std::uint64_t parent, std::uint64_t index) noexcept;

/// Seed of a named substream, e.g. substream(seed, "permutations").
std::uint64_t substream(std::uint64_t parent, std::string_view name) noexcept;

/// The single random engine used throughout. All randomness is derived from
/// explicit seeds; nothing reads ambient entropy.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal();
  std::uint64_t bits() { return engine_(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  /// Uniformly distributed unit vector in R^dim.
  std::vector<double> unit_vector(std::size_t dim);

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Direction `index` of the reproducible direction stream rooted at `seed`.
/// Prefixes of the stream are shared, so max-over-directions statistics are
/// monotone in the number of directions.
std::vector<double> stream_direction(std::uint64_t seed, std::uint64_t index, std::size_t dim);

}  // namespace edist
