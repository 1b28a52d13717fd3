#pragma once

// Self-contained random primitives. The standard <random> distributions are
// implementation-defined, so everything here is hand-rolled on top of a
// splitmix64 stream: runs reproduce bit-exactly for a given seed on any
// platform with IEEE doubles.

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace lpsr {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed from a base seed and a tag path,
/// e.g. derive_seed(seed, {kStreamNoise, household, day}).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t state = base;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t t : tags) {
    state ^= t + 0x9e3779b97f4a7c15ULL + (out << 6) + (out >> 2);
    out = splitmix64(state);
  }
  return out;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. Always consumes exactly two uniforms,
  /// so the stream position does not depend on the values drawn.
  double normal() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n). Rejection sampling, exact.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  /// Poisson count by Knuth's product method; fine for the small rates used here.
  int poisson(double rate) {
    if (rate <= 0.0) return 0;
    const double limit = std::exp(-rate);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Stream tags for derive_seed, one per independent consumer.
enum StreamTag : std::uint64_t {
  kStreamCorpus = 1,
  kStreamWeather = 2,
  kStreamNoise = 3,
  kStreamSplit = 4,
  kStreamInitGenerator = 5,
  kStreamInitDiscriminator = 6,
  kStreamInitPolisher = 7,
  kStreamShuffle = 8,
};

}  // namespace lpsr
