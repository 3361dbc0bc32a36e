#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace specfno {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: every draw is a pure function of (key, counter),
/// so values never depend on evaluation order or thread schedule. Streams
/// are split by deriving child keys.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) : key_(mix64(key ^ 0x5851f42d4c957f2dULL)) {}

  constexpr CounterRng split(std::uint64_t stream) const { return CounterRng(mix64(key_ + mix64(stream))); }

  constexpr std::uint64_t bits(std::uint64_t counter) const { return mix64(key_ ^ mix64(counter + 0x2545f4914f6cdd1dULL)); }

  /// Uniform on (0, 1].
  double uniform(std::uint64_t counter) const {
    return (double(bits(counter) >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Uniform on (lo, hi].
  double uniform(std::uint64_t counter, double lo, double hi) const { return lo + (hi - lo) * uniform(counter); }

  /// Pair of independent standard normals (Box-Muller on counters 2c, 2c+1).
  std::pair<double, double> normal_pair(std::uint64_t counter) const {
    const double r = std::sqrt(-2.0 * std::log(uniform(2 * counter)));
    const double theta = 2.0 * std::numbers::pi * uniform(2 * counter + 1);
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace specfno
