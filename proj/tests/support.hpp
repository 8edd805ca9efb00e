#pragma once

#include <cstdint>

#include "blqg/behavioral.hpp"
#include "blqg/controller_types.hpp"
#include "blqg/linalg.hpp"
#include "blqg/lti_system.hpp"
#include "blqg/random.hpp"

namespace blqg::testing {

inline Matrix mat(int r, int c, std::initializer_list<double> v) {
  Matrix m(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

inline LtiSystem example1() {
  return LtiSystem(mat(1, 1, {1.1}), mat(1, 1, {1.0}), mat(1, 1, {1.0}), mat(1, 1, {0.5}),
                   mat(1, 1, {0.8}));
}
inline LqgWeights example1_weights() { return {mat(1, 1, {1.0}), mat(1, 1, {1.0})}; }

inline LtiSystem example4() {
  return LtiSystem(mat(2, 2, {1.4918, 0.5967, 0.0, 1.4918}), mat(2, 1, {0.1049, 0.4918}),
                   mat(1, 2, {1.0, 0.0}), mat(2, 2, {4.6477, 3.7575, 3.7575, 3.0639}),
                   mat(1, 1, {2.5}));
}
inline LqgWeights example4_weights() {
  return {mat(2, 2, {3.0639, 3.7575, 3.7575, 4.6477}), mat(1, 1, {0.5966})};
}

inline Matrix gaussian(CounterRng& rng, int r, int c) {
  Matrix m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = rng.next_normal();
  return m;
}

inline Matrix random_spd(CounterRng& rng, int n, double shift = 0.1) {
  const Matrix g = gaussian(rng, n, n);
  return g * g.transpose() / n + shift * Matrix::Identity(n, n);
}

/// Random A scaled to spectral radius `rho`.
inline Matrix random_matrix_with_radius(CounterRng& rng, int n, double rho) {
  Matrix a = gaussian(rng, n, n);
  const double r = spectral_radius(a);
  return r > 0.0 ? Matrix(a * (rho / r)) : a;
}

/// Random plant with (A, C) observable and PD noise covariances.
inline LtiSystem random_system(CounterRng& rng, int n, int m, int p, double rho = 1.2) {
  for (;;) {
    Matrix a = random_matrix_with_radius(rng, n, rho);
    Matrix b = gaussian(rng, n, m);
    Matrix c = gaussian(rng, p, n);
    if (!is_observable(a, c) || !is_controllable(a, b)) continue;
    return LtiSystem(a, b, c, random_spd(rng, n), random_spd(rng, p), random_spd(rng, n));
  }
}

inline LqgWeights random_weights(CounterRng& rng, int n, int m) {
  return {random_spd(rng, n), random_spd(rng, m)};
}

/// Random compensator with a stable state matrix; F, G, H are scaled by `gain`.
inline DynamicController random_compensator(CounterRng& rng, int n, int m, int p,
                                            double rho = 0.8, double gain = 1.0) {
  return {random_matrix_with_radius(rng, n, rho), gain * gaussian(rng, n, p),
          gain * gaussian(rng, m, n), gain * gaussian(rng, m, p)};
}

/// Random compensator in current-estimator form, F = E Fbar, H = G Fbar.
inline DynamicController random_estimator_compensator(CounterRng& rng, int n, int m, int p,
                                                      double rho = 0.8, double gain = 1.0) {
  const Matrix e = random_matrix_with_radius(rng, n, rho);
  const Matrix fbar = gain * gaussian(rng, n, p);
  const Matrix g = gain * gaussian(rng, m, n);
  return {e, e * fbar, g, g * fbar};
}

inline double closed_loop_radius(const BehavioralSystem& bsys, const BehavioralGain& k) {
  return spectral_radius(bsys.A + bsys.Bu * k.matrix() * bsys.C);
}

/// Random perturbation of `k` that keeps the lifted loop stable with margin.
inline BehavioralGain perturbed_stabilizing(CounterRng& rng, const BehavioralSystem& bsys,
                                            const BehavioralGain& k, double scale,
                                            double max_rho = 0.97) {
  for (;;) {
    BehavioralGain out(k.matrix() + scale * gaussian(rng, static_cast<int>(k.matrix().rows()),
                                                     static_cast<int>(k.matrix().cols())),
                       k.dims());
    if (closed_loop_radius(bsys, out) < max_rho) return out;
    scale *= 0.7;
  }
}

}  // namespace blqg::testing
