#include "gridsec/rng.hpp"

#include <limits>

#include "gridsec/error.hpp"

namespace gridsec {

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  return splitmix64_mix(state_);
}

std::uint64_t SplitMix64::below(std::uint64_t n) {
  if (n == 0) throw ArgumentError("below(0)");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do r = next();
  while (r >= limit);
  return r % n;
}

}  // namespace gridsec
