// Deterministic counter-based random streams.
//
// Every random quantity in a run is addressed by a key path
// (seed -> purpose -> agent -> iteration -> ...). A draw depends only on the
// stream key and a monotone per-stream counter, never on evaluation order or
// thread scheduling, so repeated runs are bitwise reproducible and distinct
// purposes (probe randomization vs. noise) live on provably disjoint streams.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Core>

namespace dzo {

// SplitMix64 finalizer, full 64-bit avalanche.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed) : key_(mix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

  std::uint64_t key() const noexcept { return key_; }

  // Derives an independent substream; the parent is left untouched.
  RngStream fork(std::uint64_t word) const noexcept {
    RngStream child;
    child.key_ = mix64(key_ ^ mix64(word + 0xbb67ae8584caa73bULL));
    return child;
  }
  RngStream fork(std::uint64_t a, std::uint64_t b) const noexcept { return fork(a).fork(b); }
  RngStream fork(std::uint64_t a, std::uint64_t b, std::uint64_t c) const noexcept {
    return fork(a).fork(b).fork(c);
  }
  RngStream fork(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) const noexcept {
    return fork(a).fork(b).fork(c).fork(d);
  }

  std::uint64_t next_bits() noexcept {
    return mix64(key_ ^ mix64(counter_++ ^ 0x243f6a8885a308d3ULL));
  }

  // Uniform on [0, 1), 53-bit resolution.
  double u01() noexcept { return static_cast<double>(next_bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * u01(); }

  // Box-Muller; consumes exactly two uniforms per pair.
  std::pair<double, double> gaussian_pair() noexcept {
    const double u1 = u01();
    const double u2 = u01();
    const double radius = std::sqrt(-2.0 * std::log1p(-u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  double gaussian() noexcept { return gaussian_pair().first; }

  Eigen::VectorXd gaussian_vector(int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i + 1 < d; i += 2) {
      const auto [g0, g1] = gaussian_pair();
      v[i] = g0;
      v[i + 1] = g1;
    }
    if (d % 2 == 1) v[d - 1] = gaussian();
    return v;
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace dzo
