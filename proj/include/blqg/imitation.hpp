#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "blqg/behavioral.hpp"
#include "blqg/controller_types.hpp"
#include "blqg/linalg.hpp"
#include "blqg/lti_system.hpp"

namespace blqg {

/// Expert demonstrations in regression form, U_N = K Y_N:
///   U_N = [u(t0) ... u(t0+k-1)]                               (m x k)
///   Y_N column j = [u(t0+j-n); ...; u(t0+j-1);
///                   y(t0+j-n+1); ...; y(t0+j)]                ((nm+np) x k)
/// The y(t-n) rows are left out since K2 = 0.
struct ExpertData {
  Matrix U_N;
  Matrix Y_N;
  int t0 = 0;
  int k = 0;
  SystemDims dims;

  /// Throws DimensionError on inconsistent shapes.
  void check() const;
};

/// n + nm + np.
int sufficient_samples(int n, int m, int p);
/// 2(n+1)(m+p+1) - 1, the sample count needed to identify (E, F, G, H).
int subspace_id_samples(int n, int m, int p);

/// Distinct time indices consumed by a window of k columns: n + k.
inline int samples_used(const SystemDims& dims, int k) { return dims.n + k; }

/// Builds U_N, Y_N from input columns u(0..) and output columns y(0..).
/// k <= 0 selects nm + np columns. Throws DimensionError if t0 < n or the
/// record is too short.
ExpertData assemble_expert_data(const Matrix& inputs, const Matrix& outputs,
                                const SystemDims& dims, int t0, int k = 0);
ExpertData assemble_expert_data(const Trajectory& traj, const SystemDims& dims, int t0,
                                int k = 0);

struct LearnedGain {
  BehavioralGain gain;   ///< [K1 0 K3]
  int data_rank = 0;     ///< rank(Y_N)
  int input_rank = 0;    ///< rank(U_N)
  double residual = 0.0; ///< ||U_N - [K1 K3] Y_N||_F
  /// Set when U_N is rank deficient; the fit is still the minimum-norm one.
  std::optional<std::string> warning;
};

/// [K1 K3] = U_N Y_N^+ with K2 = 0 inserted.
LearnedGain learn_gain(const ExpertData& data);

struct RolloutReport {
  int horizon = 0;
  double output_deviation = 0.0;  ///< max_t |y_learned(t) - y_reference(t)|
  double input_deviation = 0.0;
  double learned_cost = 0.0;      ///< cost_of_gain
  double reference_cost = 0.0;
  double relative_cost_gap = 0.0;
  /// ||(K_learned - K_reference) Pi||_F, Pi the projector onto range(C P C')
  /// at the reference gain.
  double projector_distance = 0.0;
};

/// Runs both gains on the plant with the same seed and compares them.
/// Throws UnstableGainError if either loop is unstable.
RolloutReport validate_by_rollout(const LtiSystem& sys, const BehavioralGain& learned,
                                  const BehavioralGain& reference, const LqgWeights& weights,
                                  int horizon, std::uint64_t seed);

/// Recorded expert log; column i holds the sample at time first_t + i.
struct ExpertLog {
  int first_t = 0;
  Matrix inputs;
  Matrix outputs;
};

/// Parses `t,u1..um,y1..yp` with consecutive integer t. Throws
/// InputFormatError naming the offending line.
ExpertLog read_expert_csv(std::istream& is, int m, int p);

}  // namespace blqg
