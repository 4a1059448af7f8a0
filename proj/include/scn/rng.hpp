#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>

namespace scn {

// Deterministic random stream used everywhere randomness is needed.
//
// The standard library's distribution objects are implementation-defined, so
// two standard libraries can turn the same engine state into different
// doubles.  Reproducibility across toolchains is a hard requirement here
// (byte-identical CSV output for identical seeds), so this wrapper keeps the
// fully specified SplitMix64 generator and derives every variate through
// explicit inverse-CDF / rejection steps of our own.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Raw 64-bit draw (SplitMix64; passes BigCrush, period 2^64).
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) without modulo bias (rejection sampling).
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Bernoulli draw with success probability p.
  bool bernoulli(double p) { return uniform() < p; }

  // Unit-mean exponential via inverse CDF; models Rayleigh fading power.
  double exponential() { return -std::log1p(-uniform()); }

  // Standard normal via Box-Muller (both branches consumed deterministically).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard against log(0); uniform() can return exactly 0.
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Child stream for parallel fan-out: runs derived from (seed, index) are
  // independent of scheduling order.
  static Rng child(std::uint64_t base_seed, std::uint64_t index) {
    Rng mix(base_seed ^ (0xA0761D6478BD642Full + index));
    mix.next_u64();  // decorrelate nearby indices
    return Rng(mix.next_u64());
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace scn
