#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace mclp {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent seed from a root seed and a path of keys, so that
/// every (iteration, query, rollout) gets its own stream regardless of the
/// order in which work is scheduled.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // 53-bit uniform in [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t uniform_index(std::size_t n) {
    const auto wide = static_cast<unsigned __int128>(engine_()) * n;
    return static_cast<std::size_t>(wide >> 64);
  }

  /// Inverse-CDF draw. Weights need not be normalized.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return last_positive;
  }

  double gamma(double shape) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(seed, keys));
}

}  // namespace mclp
