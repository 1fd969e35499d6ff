#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace tensorreg {

/// Seeded RNG with named substreams. Every random quantity in the library
/// flows from a single 64-bit seed through substreams derived by name and
/// index, so runs are reproducible regardless of evaluation order.
/// Normal variates use Box-Muller on the raw mt19937_64 output rather than
/// std::normal_distribution, whose output is implementation-defined.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

  RngStream substream(std::string_view name, std::uint64_t index = 0) const {
    std::uint64_t h = seed_;
    for (char c : name) h = mix(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return RngStream(mix(h ^ mix(index)));
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0,1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one variate per call).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0,1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace tensorreg
