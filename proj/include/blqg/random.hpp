#pragma once

#include <cstdint>
#include <optional>

#include "blqg/linalg.hpp"

namespace blqg {

/// Counter-based generator: draw k is a pure function of (seed, k), the
/// SplitMix64 finalizer applied to seed + (k + 1) * golden_gamma. Results are
/// identical on every platform.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double next_uniform();
  /// Standard normal via Box-Muller; the second value of each pair is kept
  /// for the next call.
  double next_normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

/// Draws N(0, Sigma) vectors as S * xi, with S the symmetric square root of
/// Sigma and xi a vector of standard normals.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Matrix& covariance);

  Vector sample(CounterRng& rng) const;
  Eigen::Index dim() const { return root_.rows(); }

 private:
  Matrix root_;
};

}  // namespace blqg
