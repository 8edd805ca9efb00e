#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "blqg/behavioral.hpp"
#include "blqg/controller_types.hpp"
#include "blqg/errors.hpp"
#include "blqg/linalg.hpp"
#include "blqg/lti_system.hpp"

namespace blqg {

/// Backtracking parameters: start at alpha0, multiply by beta until
/// J(K - alpha g) <= J(K) - sigma alpha ||g||_F^2.
struct ArmijoParams {
  double alpha0 = 1.0;
  double beta = 0.8;
  double sigma = 0.7;
  int max_backtracks = 100;

  /// Throws InputFormatError unless 0 < beta < 1, 0 < sigma < 1, alpha0 > 0.
  void check() const;
};

class LineSearchError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// J(next) - J(point) for the point the line search starts from;
/// std::nullopt marks a destabilizing candidate.
using CostChange = std::function<std::optional<double>(const Matrix& next)>;

struct ArmijoStep {
  double alpha = 0.0;
  Matrix next;
  double cost_change = 0.0;
  int backtracks = 0;
};

/// First step alpha0 * beta^j with a stabilizing candidate and
///   J(K - alpha g) - J(K) <= -sigma alpha ||g||_F^2.
/// Throws LineSearchError after max_backtracks shrinks.
ArmijoStep armijo_step(const CostChange& change, const Matrix& gradient, const Matrix& point,
                       const ArmijoParams& params);

enum class DescentStatus { kGradientVanished, kMaxIterations, kLineSearchFailed };

std::string to_string(DescentStatus status);

/// The cost column is J(K^(0)) plus the accepted changes, each obtained from
/// a Lyapunov equation for the difference of the two covariances. Subtracting
/// two separately computed costs would lose everything below eps |J|.
struct DescentRecord {
  int iteration = 0;
  double cost = 0.0;
  double grad_norm = 0.0;
  double alpha = 0.0;  ///< accepted step, 0 on the terminal row
};

struct DescentTrace {
  std::vector<DescentRecord> records;
  DescentStatus status = DescentStatus::kMaxIterations;
  std::optional<double> reference_cost;

  int iterations() const { return records.empty() ? 0 : records.back().iteration; }
  double final_cost() const { return records.back().cost; }
  /// J^(i) - J*; requires a reference cost.
  std::vector<double> suboptimality_gaps() const;
};

/// CSV `iter,cost,grad_norm,alpha,subopt_gap`; the gap column is empty
/// without a reference cost.
void write_trace_csv(std::ostream& os, const DescentTrace& trace);

struct DescentOptions {
  ArmijoParams armijo;
  int max_iters = 15000;
  double grad_tol = 1e-8;
  std::optional<double> reference_cost;
};

struct BehavioralDescentOptions : DescentOptions {
  /// Keep the y(t-n) columns (K2) at exactly zero.
  bool freeze_k2 = false;
};

struct BehavioralDescentResult {
  DescentTrace trace;
  BehavioralGain gain;
};

/// J_z(to) - J_z(from) given P at `from`, without cancellation:
///   dP = A_c' dP A_c'^T + dA P A_c^T + A_c P dA^T + dA P dA^T,
///   dJ = Tr(Q_K' dP) + Tr(dQ_K P),  dA = B_u (K' - K) C.
/// std::nullopt if `to` is not stabilizing.
std::optional<double> gain_cost_change(const BehavioralSystem& bsys, const LqgWeights& weights,
                                       const BehavioralGain& from, const Matrix& p_from,
                                       const BehavioralGain& to);

/// K <- K - alpha grad J_z(K) with Armijo steps (alpha reset each
/// iteration). Stops on ||grad||_F <= grad_tol, max_iters updates, or a
/// failed line search (reported in the status, not thrown).
BehavioralDescentResult grad_descent_behavioral(const BehavioralSystem& bsys,
                                                const LqgWeights& weights,
                                                const BehavioralGain& initial,
                                                const BehavioralDescentOptions& options = {});

// ---------------------------------------------------------------------------

/// eig(A - B K) = poles. Multi-input plants are reduced to the single input
/// B v with a seeded random direction v.
Matrix place_poles(const Matrix& a, const Matrix& b, const std::vector<double>& poles,
                   std::uint64_t seed = 0);

struct StabilizingInit {
  BehavioralGain gain;
  DynamicController controller;
  Matrix state_feedback;  ///< K with u = -K xhat
  Matrix observer_gain;   ///< L with error dynamics (I - L C) A
  std::vector<double> controller_poles;
  std::vector<double> observer_poles;
};

/// Draws n state-feedback and n observer eigenvalues uniformly (distinct) in
/// [eig_low, eig_high], builds the observer-based compensator
///   E = (I - LC)(A - BK), F = E L, G = -K, H = -K L
/// and staticizes it. Throws NumericalError when placement fails or the
/// resulting behavioral loop is not stable.
StabilizingInit stabilizing_init(const LtiSystem& sys, double eig_low, double eig_high,
                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Baseline: descent over the compensator matrices (E, F, G, H).

struct CompensatorCost {
  double cost = 0.0;
  Matrix sigma;  ///< steady-state covariance of [x; x_c]
  DynamicController gradient;  ///< dJ/dE, dJ/dF, dJ/dG, dJ/dH
  double spectral_radius = 0.0;
};

/// Average cost of the plant in closed loop with (E, F, G, H), via the
/// augmented state [x; x_c] and two Lyapunov equations. Throws
/// UnstableGainError when the augmented loop is unstable.
CompensatorCost compensator_cost(const LtiSystem& sys, const LqgWeights& weights,
                                 const DynamicController& ctrl, bool with_gradient = true);

/// Cost difference between two compensators given sigma at `from`, by the
/// same difference-equation device as gain_cost_change().
std::optional<double> compensator_cost_change(const LtiSystem& sys, const LqgWeights& weights,
                                              const DynamicController& from,
                                              const Matrix& sigma_from,
                                              const DynamicController& to);

/// Stacks (E, F, G, H) column-major into one column and back.
Matrix pack_controller(const DynamicController& ctrl);
DynamicController unpack_controller(const Matrix& packed, int order, int m, int p);

/// ||fd - g||_F / (||g||_F + 1e-4 (1 + |J|)) with fd the Richardson
/// combination (4 D(h/2) - D(h)) / 3 of central differences D. The floor keeps the ratio meaningful near a
/// stationary point, where fd is dominated by rounding.
double compensator_gradient_check(const LtiSystem& sys, const LqgWeights& weights,
                                  const DynamicController& ctrl, double h = 1e-5);

struct DynamicDescentResult {
  DescentTrace trace;
  DynamicController controller;
  double self_check_error = 0.0;
};

/// Gradient descent over (E, F, G, H) with the same Armijo loop. The
/// analytic gradient is first compared with central differences at ctrl0;
/// throws NumericalError if they disagree by more than 1e-5 relative.
DynamicDescentResult grad_descent_dynamic(const LtiSystem& sys, const LqgWeights& weights,
                                          const DynamicController& initial,
                                          const DescentOptions& options = {});

}  // namespace blqg
