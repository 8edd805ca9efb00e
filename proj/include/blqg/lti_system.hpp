#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include "blqg/controller_types.hpp"
#include "blqg/linalg.hpp"

namespace blqg {

/// Stochastic discrete-time plant
///   x(t+1) = A x(t) + B u(t) + w(t),   w ~ N(0, Q_w)
///   y(t)   = C x(t) + v(t),            v ~ N(0, R_v),  x(0) ~ N(0, Sigma0).
/// Immutable; the constructor validates shapes and definiteness.
class LtiSystem {
 public:
  /// Throws DimensionError on inconsistent shapes and AssumptionError when
  /// Q_w or Sigma0 is not symmetric PSD or R_v is not symmetric PD.
  LtiSystem(Matrix a, Matrix b, Matrix c, Matrix qw, Matrix rv, Matrix sigma0);
  /// Sigma0 defaults to the identity.
  LtiSystem(Matrix a, Matrix b, Matrix c, Matrix qw, Matrix rv);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& c() const { return c_; }
  const Matrix& qw() const { return qw_; }
  const Matrix& rv() const { return rv_; }
  const Matrix& sigma0() const { return sigma0_; }

  int n() const { return dims_.n; }
  int m() const { return dims_.m; }
  int p() const { return dims_.p; }
  const SystemDims& dims() const { return dims_; }

 private:
  Matrix a_, b_, c_, qw_, rv_, sigma0_;
  SystemDims dims_;
};

/// Quadratic weights of the average cost E[x'Q_x x + u'R_u u].
struct LqgWeights {
  Matrix qx;
  Matrix ru;

  /// Throws DimensionError / AssumptionError (Q_x PSD, R_u PD).
  void check(const SystemDims& dims) const;
};

struct AssumptionReport {
  bool controllable_ab = false;
  bool controllable_a_qw = false;
  bool observable_ac = false;
  bool observable_a_qx = false;

  bool all() const {
    return controllable_ab && controllable_a_qw && observable_ac && observable_a_qx;
  }
  /// Comma-separated names of the failing assumptions, empty if all hold.
  std::string failures() const;
};

/// (A,B) and (A,Q_w^{1/2}) controllable, (A,C) and (A,Q_x^{1/2}) observable.
AssumptionReport validate_assumptions(const LtiSystem& sys, const LqgWeights& weights);

// ---------------------------------------------------------------------------
// Control laws understood by the simulator.

struct ZeroInput {};

/// Dynamic compensator started from `initial_state` (zero when empty).
struct CompensatorLaw {
  DynamicController controller;
  Vector initial_state;
};

/// Static behavioral feedback; u(t) = 0 until a full history window exists
/// (t < n).
struct BehavioralLaw {
  BehavioralGain gain;
};

using ControlLaw = std::variant<ZeroInput, CompensatorLaw, BehavioralLaw>;

struct SimulationOptions {
  /// Overrides the sampled initial state.
  std::optional<Vector> x0;
  /// Forces w and v to zero (the generator is still advanced identically).
  bool noiseless = false;
};

/// Recorded rollout over horizon T. Column t of each matrix holds the value
/// at time t: x, y and v have T+1 columns, u and w have T.
struct Trajectory {
  int horizon = 0;
  Matrix x;
  Matrix u;
  Matrix y;
  Matrix w;
  Matrix v;
  std::uint64_t seed = 0;
};

/// Rolls the plant forward T steps under `law`. Noise is drawn from a
/// CounterRng(seed) in the fixed order x(0), v(0), then (w(t), v(t+1)) for
/// t = 0..T-1, so equal seeds give equal disturbances for every law.
/// Throws DimensionError if the law does not fit the plant.
Trajectory simulate(const LtiSystem& sys, const ControlLaw& law, int horizon,
                    std::uint64_t seed, const SimulationOptions& options = {});

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

/// Mean and standard error over `trials` independent rollouts of
/// (1/T) sum_{t<T} x'Q_x x + u'R_u u; trial i uses seed + i. Throws
/// NumericalError once any state component exceeds 1e9 in magnitude.
MonteCarloEstimate monte_carlo_cost(const LtiSystem& sys, const ControlLaw& law,
                                    const LqgWeights& weights, int horizon, int trials,
                                    std::uint64_t seed);

/// CSV with header t,x1..xn,u1..um,y1..yp,w1..wn,v1..vp; one row per
/// t = 0..T, with u and w left empty on the final row.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace blqg
