#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "crowdguard/types.hpp"

namespace crowdguard {

/// Seeded random source with hand-rolled variate transforms.
///
/// std::mt19937_64 output is pinned by the standard, but the standard
/// distributions are not; every transform here is spelled out so that a
/// given seed yields the same stream on every platform and toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Child generator with an independent stream, reproducible from
  /// (parent seed, stream id) alone.
  Rng fork(std::uint64_t stream) const { return Rng(mix(seed_, stream)); }

  std::uint64_t bits() { return gen_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(gen_() % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller; the spare deviate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = uniform();
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 2.0 * M_PI * v;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Index drawn with probability proportional to weights[i].
  int categorical(const Vector& weights) {
    const double total = weights.sum();
    if (total <= 0.0) throw std::invalid_argument("categorical: non-positive weight sum");
    double u = uniform() * total;
    for (Index i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size() - 1);
  }

  /// k distinct values from {0, ..., n-1}, in draw order (partial Fisher-Yates).
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out(k);
    for (int i = 0; i < k; ++i) {
      const int j = uniform_int(i, n - 1);
      std::swap(pool[i], pool[j]);
      out[i] = pool[i];
    }
    return out;
  }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words.
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace crowdguard
