#pragma once

#include <optional>

#include "blqg/classical_lqg.hpp"
#include "blqg/controller_types.hpp"
#include "blqg/linalg.hpp"
#include "blqg/lti_system.hpp"

namespace blqg {

/// Offsets and sizes of the four history windows stacked in
///   z(t) = [U(t-1); Y(t); W(t-1); V(t)].
struct BlockLayout {
  int u_offset = 0, u_size = 0;  ///< u(t-n) .. u(t-1), nm entries
  int y_offset = 0, y_size = 0;  ///< y(t-n) .. y(t), (n+1)p entries
  int w_offset = 0, w_size = 0;  ///< w(t-n) .. w(t-1), n*n entries
  int v_offset = 0, v_size = 0;  ///< v(t-n) .. v(t), (n+1)p entries

  static BlockLayout for_dims(const SystemDims& dims);
  int state_dim() const { return v_offset + v_size; }
  int history_dim() const { return u_size + y_size; }
};

/// Plant rewritten on the behavioral state:
///   z(t+1) = A z(t) + B_u u(t) + B_w w(t) + B_v v(t+1),   y_z(t) = C z(t),
/// with x(t) = H z(t) for t >= n and stage cost z'Q_z z + u'R_u u.
struct BehavioralSystem {
  SystemDims dims;
  BlockLayout layout;
  Matrix A, Bu, Bw, Bv, C;
  /// Last-output row blocks of A: y(t+1) = [Au Ay Aw Av] z(t) + CB u + C w + v.
  Matrix Au, Ay, Aw, Av;
  /// State reconstruction map, x(t) = H z(t).
  Matrix H;
  /// H' Q_x H; empty until a cost has been attached.
  Matrix Qz;
  /// Noise covariances carried over from the plant.
  Matrix Qw, Rv;

  int state_dim() const { return layout.state_dim(); }
  int history_dim() const { return layout.history_dim(); }
};

/// Builds the lifted matrices. Throws AssumptionError if the observability
/// matrix [C; CA; ...; CA^n] has rank below n.
BehavioralSystem lift_system(const LtiSystem& sys);

/// Q_z = H' Q_x H (symmetrized). Throws like lift_system().
Matrix lift_cost(const LtiSystem& sys, const LqgWeights& weights);

/// lift_system() with Q_z attached.
BehavioralSystem lift_problem(const LtiSystem& sys, const LqgWeights& weights);

// ---------------------------------------------------------------------------
// Dynamic -> static controller map.

struct StaticizationMap {
  Matrix T1;   ///< [G; GE; ...; GE^{n-1}]
  Matrix T2;   ///< [GE^{n-1}F ... GF  H]
  Matrix M;    ///< block lower-triangular Markov parameters, nm x (n+1)p
  Matrix GEn;  ///< G E^n
  int t1_rank = 0;
};

StaticizationMap staticization_map(const DynamicController& ctrl, const SystemDims& dims);

/// K = [G E^n T1^+,  T2 - G E^n T1^+ M]. Throws AssumptionError (naming the
/// rank) when T1 does not have full column rank.
BehavioralGain staticize(const DynamicController& ctrl, const SystemDims& dims);

/// Controller state x_c(t-n) consistent with the windows U(t-1), Y(t):
/// T1^+ (U - M Y).
Vector reconstruct_controller_state(const StaticizationMap& map, const Vector& u_window,
                                    const Vector& y_window);

// ---------------------------------------------------------------------------
// Closed-form cost, gradient and optimality certificate.

struct GainCost {
  double cost = 0.0;
  Matrix P;               ///< steady-state E[z z']
  double spectral_radius = 0.0;
  double stability_margin() const { return 1.0 - spectral_radius; }
};

/// J_z(K) = Tr(Q_K P), Q_K = Q_z + C'K'R_u K C, P = A_c P A_c' + B_w Q_w B_w'
/// + B_v R_v B_v', A_c = A + B_u K C. Throws UnstableGainError (carrying rho)
/// when rho(A_c) >= 1.
GainCost cost_of_gain(const BehavioralSystem& bsys, const BehavioralGain& gain,
                      const LqgWeights& weights,
                      LyapunovMethod method = LyapunovMethod::kSchur);

struct GainEvaluation {
  double cost = 0.0;
  Matrix P;
  Matrix M;         ///< M = A_c' M A_c + Q_K
  Matrix gradient;  ///< dJ_z/dK, m x d_y
  double spectral_radius = 0.0;
};

/// Cost plus gradient 2(R_u K C P C' + B_u' M A_c P C') from one Schur
/// factorization of A_c.
GainEvaluation evaluate_gain(const BehavioralSystem& bsys, const BehavioralGain& gain,
                             const LqgWeights& weights);

Matrix gradient_of_gain(const BehavioralSystem& bsys, const BehavioralGain& gain,
                        const LqgWeights& weights);

struct RiccatiPair {
  Matrix M;
  Matrix P;
  Matrix S_M;  ///< (R_u + B_u'MB_u)^{-1}
  Matrix S_P;  ///< (C P C')^+
  double residual_M = 0.0;  ///< Frobenius norm of the M equation residual
  double residual_P = 0.0;
  double relative_residual_M = 0.0;  ///< residual_M / ||M||_F
  double relative_residual_P = 0.0;
};

/// Substitutes (M, P) into the two coupled Riccati equations that
/// characterize the optimal static gain and reports the residuals.
RiccatiPair coupled_riccati_residuals(const BehavioralSystem& bsys, const LqgWeights& weights,
                                      const Matrix& M, const Matrix& P);

/// -(R_u + B_u'MB_u)^{-1} B_u' M A P C' (C P C')^+, the minimum-norm
/// representative of the optimal gain for given (M, P).
Matrix riccati_gain(const BehavioralSystem& bsys, const LqgWeights& weights, const Matrix& M,
                    const Matrix& P);

struct BehavioralLqgSolution {
  BehavioralSystem bsys;
  LqgSolution classical;
  BehavioralGain gain;
  RiccatiPair riccati;
  double cost = 0.0;
  double gradient_norm = 0.0;  ///< ||dJ_z/dK||_F at the returned gain
  double spectral_radius = 0.0;
};

/// Optimal static gain via the separation-principle compensator followed by
/// staticize(); M and P are the closed-loop Lyapunov solutions at that gain.
/// Throws AssumptionError when validate_assumptions() fails.
BehavioralLqgSolution solve_behavioral_lqg(const LtiSystem& sys, const LqgWeights& weights);

/// Orthogonal projector onto the range of C P C'. Gains that agree after
/// right-multiplication by it give the same closed loop.
Matrix gauge_projector(const BehavioralSystem& bsys, const Matrix& P);

// ---------------------------------------------------------------------------

struct SparsityPartition {
  Matrix K1, K2, K3;
  bool is_sparse = false;  ///< ||K2||_inf <= 1e-8
};

SparsityPartition sparsity_partition(const BehavioralGain& gain);

struct BehavioralState {
  Vector z;
  Vector yz;
};

/// Stacks z(t) from a recorded trajectory. Throws DimensionError if t < n or
/// t > T.
BehavioralState behavioral_state(const Trajectory& traj, int t, const SystemDims& dims);

/// Lifted rollout z(t0..T) driven by the noises recorded in `source`,
/// starting at t0 = n from the history of `source`. With a gain the input is
/// u(t) = K y_z(t), otherwise zero. Column j of `z` is z(t0 + j).
struct LiftedTrajectory {
  int t0 = 0;
  Matrix z;
  Matrix u;
  int y_row = 0;  ///< offset of y(t) inside z(t)
  int p = 0;
  /// Output component y(t) of each z(t), one column per step.
  Matrix outputs() const;
};

LiftedTrajectory simulate_lifted(const BehavioralSystem& bsys, const Trajectory& source,
                                 const std::optional<BehavioralGain>& gain);

}  // namespace blqg
