#ifndef VSTREAM_RNG_H_
#define VSTREAM_RNG_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace vstream {

// SplitMix64 finalizer (Steele, Lea & Flood, 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// The index-th output of SplitMix64 seeded with `seed`:
//   hash64(seed, i) = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)  (mod 2^64)
// Simulator stream seeds are derived as hash64(seed, stream_index).
constexpr std::uint64_t hash64(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed + (index + 1) * kGoldenGamma);
}

// Counter-based generator: draw i of a generator keyed by k is hash64(k, i).
// Every derived variate below is computed with explicit formulas (no
// <random> distributions), so sequences are identical on every platform
// with IEEE doubles and a correctly rounded libm.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return hash64(key_, counter_++); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Standard normal by the cosine branch of Box-Muller; consumes two draws.
  double normal() {
    const double u1 = (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n) by rejection; n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x = 0;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace vstream

#endif  // VSTREAM_RNG_H_
