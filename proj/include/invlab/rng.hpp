// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "invlab/types.hpp"

namespace invlab {

// SplitMix64: counter-based 64-bit generator (Steele, Lea & Flood 2014).
// Output i of stream `seed` is mix64(seed + (i+1)*GAMMA), so the sequence is
// a pure function of (seed, counter) and identical on every platform.
// Normal variates use the Marsaglia polar method; std::log and std::sqrt are
// the only libm calls involved.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Derives an independent child seed from a master seed and an index.
  static constexpr std::uint64_t derive(std::uint64_t master, std::uint64_t index) {
    return mix64(master + (index + 1) * kGamma);
  }

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (-1, 1).
  double next_symmetric() { return 2.0 * next_double() - 1.0; }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal variate (polar method).
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = next_symmetric();
      v = next_symmetric();
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  /// Grid of iid standard normals, filled row-major.
  Latent normal_grid(Eigen::Index rows, Eigen::Index cols) {
    Latent g(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        g(r, c) = next_normal();
      }
    }
    return g;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace invlab
