#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace evobj {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a chain of tags
// (epoch, scene index, stage id, ...). Used everywhere a sub-component needs
// its own reproducible randomness.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t t : tags) h = splitmix64(h ^ (t + 0x165667b19e3779f9ULL));
  return h;
}

// mt19937_64 with hand-rolled distributions. The std:: distributions are not
// byte-portable across standard libraries; these are, which keeps datasets
// and training logs reproducible from the seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of randomness.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) { return engine_() % n; }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Box-Muller; one value per call, no caching, so streams stay predictable.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // First n entries of a random permutation of 0..total-1 (partial
  // Fisher-Yates); n <= total.
  std::vector<std::uint32_t> sample_without_replacement(std::uint32_t total, std::uint32_t n) {
    std::vector<std::uint32_t> idx(total);
    for (std::uint32_t i = 0; i < total; ++i) idx[i] = i;
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::uint32_t j = i + static_cast<std::uint32_t>(uniform_index(total - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace evobj
