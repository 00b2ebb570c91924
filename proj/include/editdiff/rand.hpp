#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "editdiff/errors.hpp"

namespace editdiff {

// All randomness flows through an explicit engine so every operation is
// reproducible from a 64-bit seed. Sampling helpers avoid std::*_distribution
// (their outputs differ across standard library implementations).
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent per-example stream: stream = hash(seed, index).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x51ed270b0f4aULL));
}

// Uniform double in [0, 1) with 53 bits of resolution.
inline double rand_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform index in [0, n).
inline std::size_t rand_index(Rng& rng, std::size_t n) {
  if (n == 0) throw InternalError("rand_index: empty range");
  return static_cast<std::size_t>(rand_unit(rng) * static_cast<double>(n));
}

// Uniform integer in [lo, hi] inclusive.
inline long rand_int(Rng& rng, long lo, long hi) {
  if (hi < lo) throw InternalError("rand_int: bad range");
  return lo + static_cast<long>(rand_index(rng, static_cast<std::size_t>(hi - lo + 1)));
}

// Categorical draw by CDF scan; probs need not be perfectly normalized.
inline std::size_t sample_categorical(Rng& rng, std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) total += p;
  if (!(total > 0.0)) throw DataError("sample_categorical: zero-mass distribution");
  double u = rand_unit(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

// Poisson(lambda) by Knuth's product-of-uniforms method (lambda is small here).
inline int sample_poisson(Rng& rng, double lambda) {
  const double limit = std::exp(-lambda);
  int k = 0;
  double prod = rand_unit(rng);
  while (prod > limit) {
    ++k;
    prod *= rand_unit(rng);
  }
  return k;
}

// Poisson truncated to >= 1: zero draws are rejected and resampled.
inline int sample_truncated_poisson(Rng& rng, double lambda) {
  for (;;) {
    int k = sample_poisson(rng, lambda);
    if (k >= 1) return k;
  }
}

}  // namespace editdiff
