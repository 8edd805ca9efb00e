#pragma once

#include "blqg/linalg.hpp"

namespace blqg {

/// State, input and output dimensions (n, m, p) of a plant.
struct SystemDims {
  int n = 0;
  int m = 0;
  int p = 0;

  /// Width of the measurable history y_z = [U(t-1); Y(t)]: nm + (n+1)p.
  int history_dim() const { return n * m + (n + 1) * p; }
  /// Width of the full behavioral state z = [U; Y; W; V].
  int behavioral_dim() const { return n * m + (n + 1) * p + n * n + (n + 1) * p; }

  friend bool operator==(const SystemDims&, const SystemDims&) = default;
};

/// Compensator
///   x_c(t+1) = E x_c(t) + F y(t)
///   u(t)     = G x_c(t) + H y(t)
struct DynamicController {
  Matrix E;
  Matrix F;
  Matrix G;
  Matrix H;

  int order() const { return static_cast<int>(E.rows()); }
  /// Throws DimensionError if the four blocks are inconsistent or do not
  /// match (m, p).
  void check(int m, int p) const;
};

/// Static gain on the measurable history,
///   u(t) = K [U(t-1); Y(t)] = K1 U(t-1) + K2 y(t-n) + K3 Ybar(t),
/// with U(t-1) = [u(t-n); ...; u(t-1)] and Ybar(t) = [y(t-n+1); ...; y(t)].
class BehavioralGain {
 public:
  BehavioralGain() = default;
  /// Throws DimensionError unless K is m x (nm + (n+1)p).
  BehavioralGain(Matrix k, SystemDims dims);

  static BehavioralGain zero(SystemDims dims);

  const Matrix& matrix() const { return k_; }
  const SystemDims& dims() const { return dims_; }

  /// Columns acting on U(t-1), width nm.
  Matrix k1() const { return k_.leftCols(dims_.n * dims_.m); }
  /// Columns acting on y(t-n), width p.
  Matrix k2() const { return k_.middleCols(dims_.n * dims_.m, dims_.p); }
  /// Columns acting on Ybar(t), width np.
  Matrix k3() const { return k_.rightCols(dims_.n * dims_.p); }

 private:
  Matrix k_;
  SystemDims dims_;
};

}  // namespace blqg
