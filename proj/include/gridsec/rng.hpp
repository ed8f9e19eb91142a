#pragma once

#include <cstdint>

namespace gridsec {

/// SplitMix64 (Steele, Lea, Flood 2014).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  std::uint64_t next();
  /// Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform in [0, n); n must be >= 1.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace gridsec
