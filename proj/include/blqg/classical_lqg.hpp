#pragma once

#include "blqg/controller_types.hpp"
#include "blqg/linalg.hpp"
#include "blqg/lti_system.hpp"

namespace blqg {

/// Compensator driven by the *next* measurement,
///   xi(t+1) = Ebar xi(t) + Fbar y(t+1)
///   u(t)    = Gbar xi(t).
struct AltController {
  Matrix Ebar;
  Matrix Fbar;
  Matrix Gbar;
};

struct DareSolution {
  Matrix X;
  /// (R + B'XB)^{-1} B'XA
  Matrix gain;
  /// ||X - A'XA + A'XB(R+B'XB)^{-1}B'XA - Q||_F / ||X||_F
  double residual = 0.0;
  int iterations = 0;
};

struct DareOptions {
  double tolerance = 1e-13;
  int max_iterations = 1'000'000;
  double residual_tolerance = 1e-11;
};

/// X = A'XA - A'XB(R+B'XB)^{-1}B'XA + Q by fixed-point iteration from X = Q.
/// Stops when successive iterates differ by less than `tolerance` relative.
/// Throws NumericalError on non-convergence, on an indefinite R + B'XB, or
/// when the final residual exceeds `residual_tolerance`.
DareSolution solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                        const DareOptions& options = {});

/// Separation-principle LQG solution.
struct LqgSolution {
  Matrix k_lqr;  ///< u = -K_lqr xhat
  Matrix k_kf;   ///< current-estimator gain P C'(C P C' + R_v)^{-1}
  DareSolution control;
  DareSolution filter;
  AltController alt;            ///< (I - K_kf C)(A - B K_lqr), K_kf, -K_lqr
  DynamicController controller;
};

/// Optimal LQG compensator in the (E, F, G, H) form:
///   E = (I - K_kf C)(A - B K_lqr),  F = E K_kf,  G = -K_lqr,  H = -K_lqr K_kf.
LqgSolution lqg_compensator(const LtiSystem& sys, const LqgWeights& weights);

/// (E, F, G, H) = (Ebar, Ebar Fbar, Gbar, Gbar Fbar). Both compensators give
/// the same inputs for the same outputs when y(0) = 0 and x_c(0) = xi(0).
DynamicController convert_alt_form(const AltController& alt);

/// Inputs u(0..T-1) of the alternative form for outputs y(0..T) (columns).
Matrix rollout_alt_controller(const AltController& alt, const Matrix& outputs,
                              const Vector& initial_state);
/// Inputs u(0..T-1) of the (E,F,G,H) form for outputs y(0..T-1) (columns).
Matrix rollout_controller(const DynamicController& ctrl, const Matrix& outputs,
                          const Vector& initial_state);

/// Plant + compensator closed loop on [x; x_c]:
///   [A + BHC, BG; FC, E].
Matrix compensator_closed_loop(const LtiSystem& sys, const DynamicController& ctrl);

}  // namespace blqg
