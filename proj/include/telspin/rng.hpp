#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random streams: every trajectory index derives its own
// SplitMix64 stream from (seed, index) through the 64-bit finalizer, so
// results never depend on which thread runs which trajectory.

namespace telspin {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += kGolden;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1]: 53-bit mantissa, never zero, so logs stay finite.
  double uniform01() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  // Exponential holding time with the given rate (1/us).
  double exponential(double rate) { return -std::log(uniform01()) / rate; }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t(0) - ~std::uint64_t(0) % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }
};

// Whitened per-trajectory seed; index stride keeps neighboring streams
// decorrelated through the finalizer.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 g(seed);
  const std::uint64_t whitened = g.next();
  SplitMix64 h(whitened + index * kGolden);
  return h.next();
}

}  // namespace telspin
