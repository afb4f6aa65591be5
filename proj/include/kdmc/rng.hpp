#pragma once

// Reproducible per-path normal streams.
//
// Stream derivation (the contract of RngSpec): path i under master seed s
// owns one xoshiro256++ generator whose 256-bit state is produced by four
// successive outputs of a splitmix64 sequence started at
//
//   z0 = mix(s ^ mix(i + 0x9E3779B97F4A7C15))
//
// where mix is the splitmix64 finalizer. Normals are obtained by the
// inverse-CDF transform of the generator's uniforms, so the k-th normal of a
// path is a pure function of (seed, path_index, k) and is identical across
// platforms and worker counts.

#include <cstdint>

#include "kdmc/math.hpp"

namespace kdmc {

/// Seed for a family of per-path streams; see the header comment for the
/// documented (seed, path_index) -> generator-state derivation.
struct RngSpec {
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t path_index) {
    std::uint64_t z =
        detail::splitmix64_mix(seed ^ detail::splitmix64_mix(
                                          path_index + 0x9E3779B97F4A7C15ull));
    for (auto& word : s_) {
      z += 0x9E3779B97F4A7C15ull;
      word = detail::splitmix64_mix(z);
    }
    // An all-zero xoshiro state is invalid; unreachable in practice but
    // guarded for completeness.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x1ull;
  }

  std::uint64_t next_u64() {
    // xoshiro256++
    const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  /// Uniform strictly inside (0,1): ((u64 >> 11) + 0.5) * 2^-53.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via inv_norm_cdf(next_uniform()).
  double next_normal() { return inv_norm_cdf(next_uniform()); }

 private:
  std::uint64_t s_[4];
};

inline NormalStream make_stream(const RngSpec& spec, std::uint64_t path_index) {
  return NormalStream(spec.seed, path_index);
}

}  // namespace kdmc
