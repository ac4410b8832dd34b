#pragma once

#include <cstdint>

#include "trolink/numeric.hpp"

namespace trolink {

/// splitmix64 step; used for seeding and for deriving independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic xoshiro256** generator.  All floating-point output is
/// produced from raw 64-bit draws with explicit arithmetic, so sequences are
/// reproducible across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  /// Seed for the i-th independent sample stream of a search.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t sm = seed ^ (0xA0761D6478BD642FULL * (stream + 1));
    return splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi], inclusive.
  Index uniform_index(Index lo, Index hi) {
    if (hi < lo) throw structural_error("uniform_index: empty range");
    const auto width = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<Index>(next_u64() % width);
  }

  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // Box-Muller on open-interval uniforms.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  cplx cgaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return cplx(re, im) * 0.7071067811865476;
  }

  Mat gaussian_matrix(Index rows, Index cols) {
    Mat m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = cgaussian();
    return m;
  }

  /// Haar-ish unitary: QR of a complex Gaussian matrix with the R diagonal
  /// phases absorbed, so the result is deterministic in the draws.
  Mat unitary(Index n) {
    if (n == 0) return Mat(0, 0);
    Mat a = gaussian_matrix(n, n);
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    Mat r = q.adjoint() * a;
    for (Index j = 0; j < n; ++j) {
      const cplx d = r(j, j);
      const double ad = std::abs(d);
      q.col(j) *= (ad > 0) ? d / ad : cplx(1, 0);
    }
    return q;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace trolink
