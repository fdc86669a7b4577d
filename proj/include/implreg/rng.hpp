#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace implreg {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, counter), so streams are independent and any draw can be
/// reproduced without replaying the ones before it.
class CounterRng {
 public:
  enum class Stream : std::uint64_t {
    DataIndex = 1,
    LabelNoise = 2,
    Init = 3,
    Dataset = 4,
    Bootstrap = 5,
    Test = 6,
    Derived = 7,
  };

  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t bits(Stream stream, std::uint64_t counter, std::uint64_t lane = 0) const {
    std::uint64_t h = mix(seed_ ^ 0x243f6a8885a308d3ULL);
    h = mix(h ^ (static_cast<std::uint64_t>(stream) * 0x9e3779b97f4a7c15ULL));
    h = mix(h ^ counter);
    return mix(h ^ (lane * 0xd1b54a32d192ed03ULL + 0x13198a2e03707344ULL));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform(Stream stream, std::uint64_t counter, std::uint64_t lane = 0) const {
    return static_cast<double>(bits(stream, counter, lane) >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t index(Stream stream, std::uint64_t counter, std::uint64_t n) const {
    // Lemire's multiply-shift; bias is below 2^-64 * n.
    const unsigned __int128 m =
        static_cast<unsigned __int128>(bits(stream, counter)) * static_cast<unsigned __int128>(n);
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller on two lanes of the same counter.
  double normal(Stream stream, std::uint64_t counter) const {
    const double u1 = 1.0 - uniform(stream, counter, 0);  // (0, 1]
    const double u2 = uniform(stream, counter, 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// +1 or -1 with equal probability.
  double sign(Stream stream, std::uint64_t counter) const {
    return (bits(stream, counter) >> 63) ? 1.0 : -1.0;
  }

 private:
  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

/// Seed for sub-run k of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  return CounterRng(seed).bits(CounterRng::Stream::Derived, k);
}

}  // namespace implreg
