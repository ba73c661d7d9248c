#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace smartquery {

// Engine plus hand-rolled draws, so sequences do not depend on the standard
// library's distribution implementations.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [0, n) by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <typename T>
void shuffle(std::span<T> v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// Marsaglia-Tsang gamma sampler (shape > 0, unit scale).
double gamma_sample(Rng& rng, double shape);
double beta_sample(Rng& rng, double a, double b);
double normal_sample(Rng& rng);

// Child seed for stream `index` of a parent seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

}  // namespace smartquery
