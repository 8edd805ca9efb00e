#include "blqg/random.hpp"

#include <cmath>
#include <numbers>

namespace blqg {

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::next_u64() {
  constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  ++counter_;
  return mix(seed_ + counter_ * kGamma);
}

double CounterRng::next_uniform() {
  // 53 random bits, shifted half an ulp away from zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::next_normal() {
  if (spare_) {
    const double out = *spare_;
    spare_.reset();
    return out;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

GaussianSampler::GaussianSampler(const Matrix& covariance) : root_(sym_sqrt(covariance)) {}

Vector GaussianSampler::sample(CounterRng& rng) const {
  Vector xi(root_.cols());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = rng.next_normal();
  return root_ * xi;
}

}  // namespace blqg
