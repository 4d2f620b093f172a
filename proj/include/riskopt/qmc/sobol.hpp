#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "riskopt/errors.hpp"
#include "riskopt/linalg.hpp"
#include "riskopt/qmc/sobol_table.hpp"

namespace riskopt::qmc {

inline constexpr int kSobolBits = 32;

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent stream seed for (seed, stream).
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

namespace detail {

inline std::array<std::uint32_t, kSobolBits> direction_numbers(int dim) {
  std::array<std::uint32_t, kSobolBits> v{};
  if (dim == 0) {
    v.fill(1);
  } else {
    const std::uint32_t p = kSobolPoly[dim];
    const int deg = std::bit_width(p) - 1;
    for (int j = 0; j < deg; ++j) v[j] = kSobolInit[dim][j];
    for (int j = deg; j < kSobolBits; ++j) {
      std::uint32_t nv = v[j - deg];
      std::uint32_t pow2 = 1;
      for (int k = 0; k < deg; ++k) {
        pow2 <<= 1;
        if ((p >> (deg - 1 - k)) & 1u) nv ^= pow2 * v[j - k - 1];
      }
      v[j] = nv;
    }
  }
  for (int j = 0; j < kSobolBits; ++j) v[j] <<= (kSobolBits - 1 - j);
  return v;
}

inline std::uint32_t reverse_bits(std::uint32_t x) {
  x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
  x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
  x = ((x >> 4) & 0x0f0f0f0fu) | ((x & 0x0f0f0f0fu) << 4);
  x = ((x >> 8) & 0x00ff00ffu) | ((x & 0x00ff00ffu) << 8);
  return (x >> 16) | (x << 16);
}

// Hash-based Laine-Karras permutation (Burley 2020).
inline std::uint32_t laine_karras(std::uint32_t x, std::uint32_t seed) {
  x += seed;
  x ^= x * 0x6c50b47cu;
  x ^= x * 0xb82f1e52u;
  x ^= x * 0xc7afe638u;
  x ^= x * 0x8d22f6e6u;
  return x;
}

inline std::uint32_t nested_uniform_scramble(std::uint32_t x, std::uint32_t seed) {
  return reverse_bits(laine_karras(reverse_bits(x), seed));
}

}  // namespace detail

/// n x dim matrix of Owen-scrambled Sobol points in [0,1).
inline Matrix sobol_points(int dim, int n, std::uint64_t seed, bool scramble = true) {
  if (dim < 1 || dim > detail::kSobolMaxDim) {
    throw InvalidArgument("sobol_points: dim must be in [1, " + std::to_string(detail::kSobolMaxDim) +
                          "], got " + std::to_string(dim));
  }
  if (n < 1) throw InvalidArgument("sobol_points: n must be positive");
  Matrix out(n, dim);
  constexpr double kScale = 1.0 / 4294967296.0;
  for (int k = 0; k < dim; ++k) {
    const auto v = detail::direction_numbers(k);
    const auto s = static_cast<std::uint32_t>(child_seed(seed, static_cast<std::uint64_t>(k)));
    for (int i = 0; i < n; ++i) {
      std::uint32_t g = static_cast<std::uint32_t>(i) ^ (static_cast<std::uint32_t>(i) >> 1);
      std::uint32_t x = 0;
      for (int b = 0; g != 0; ++b, g >>= 1)
        if (g & 1u) x ^= v[b];
      if (scramble) x = detail::nested_uniform_scramble(x, s);
      out(i, k) = static_cast<double>(x) * kScale;
    }
  }
  return out;
}

}  // namespace riskopt::qmc
