#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace orpa {

/// All randomness goes through a 64-bit Mersenne twister, whose output
/// sequence is fixed by the standard. Distributions are built by hand below so
/// that streams are reproducible across standard library implementations.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the stream named `label` derived from `master`. Streams with
/// different labels are statistically independent and do not shift when
/// another stream consumes more or fewer draws.
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view label) {
  return splitmix64(splitmix64(master) ^ fnv1a(label));
}

inline Rng make_stream(std::uint64_t master, std::string_view label) {
  return Rng(stream_seed(master, label));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal by Box–Muller; consumes two uniforms per call.
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Uniform integer in {0, ..., n-1} by rejection (no modulo bias).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

/// Inverse-CDF lookup: the first index whose cumulative mass exceeds u.
/// Zero-mass cells are never selected; ties resolve toward the lower index.
inline std::size_t sample_index(std::span<const double> cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) {
    // u landed above a total that rounded below 1; take the last cell with mass.
    std::size_t i = cdf.size() - 1;
    while (i > 0 && cdf[i] == cdf[i - 1]) --i;
    return i;
  }
  return static_cast<std::size_t>(it - cdf.begin());
}

}  // namespace orpa
