#pragma once

#include <Eigen/Dense>

namespace blqg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Singular values below max(rows, cols) * eps * sigma_max are treated as
/// zero by every rank decision and pseudo-inverse in the library.
double svd_cutoff(const Eigen::Ref<const Matrix>& a);

/// Moore-Penrose pseudo-inverse via SVD with the svd_cutoff() rule. For a
/// tall full-column-rank matrix this is the left inverse, for a fat
/// full-row-rank matrix the right inverse.
Matrix pinv(const Eigen::Ref<const Matrix>& a);

/// Numerical rank. If `tolerance` is negative the svd_cutoff() rule is used.
int rank(const Eigen::Ref<const Matrix>& a, double tolerance = -1.0);

/// Symmetric square root via eigendecomposition; negative eigenvalues are
/// clamped at zero so PSD (singular) covariances are handled.
Matrix sym_sqrt(const Eigen::Ref<const Matrix>& a);

bool is_symmetric(const Eigen::Ref<const Matrix>& a, double rel_tol = 1e-10);

/// Symmetric and all eigenvalues >= -tol * max(1, |lambda|_max).
bool is_psd(const Eigen::Ref<const Matrix>& a, double tol = 1e-10);
bool is_pd(const Eigen::Ref<const Matrix>& a);

Matrix symmetrize(const Eigen::Ref<const Matrix>& a);

double spectral_radius(const Eigen::Ref<const Matrix>& a);

Matrix matrix_power(const Eigen::Ref<const Matrix>& a, int k);

/// [B, AB, ..., A^{n-1}B]
Matrix controllability_matrix(const Eigen::Ref<const Matrix>& a,
                              const Eigen::Ref<const Matrix>& b);
/// [C; CA; ...; CA^{n-1}]
Matrix observability_matrix(const Eigen::Ref<const Matrix>& a,
                            const Eigen::Ref<const Matrix>& c);

/// Rank of the controllability matrix equals n, with the rank tolerance
/// n * eps * sigma_max.
bool is_controllable(const Eigen::Ref<const Matrix>& a,
                     const Eigen::Ref<const Matrix>& b);
bool is_observable(const Eigen::Ref<const Matrix>& a,
                   const Eigen::Ref<const Matrix>& c);

/// Orthogonal projector onto the column space of a symmetric matrix.
Matrix range_projector(const Eigen::Ref<const Matrix>& sym);

// ---------------------------------------------------------------------------
// Discrete Lyapunov equations X = A X A^T + Q.

enum class LyapunovMethod {
  kSchur,      ///< complex Schur form + triangular column sweeps, O(d^3)
  kKronecker,  ///< (I - A (x) A) vec(X) = vec(Q), O(d^6)
  kDoubling,   ///< Smith doubling iteration
};

/// Factorization of a stable matrix A that solves both
///   X = A X A^T + Q   (solve_forward)  and
///   X = A^T X A + Q   (solve_adjoint)
/// with one Schur decomposition. Throws UnstableGainError if rho(A) >= 1.
class StableLyapunovSolver {
 public:
  explicit StableLyapunovSolver(const Eigen::Ref<const Matrix>& a);

  double spectral_radius() const { return rho_; }
  Matrix solve_forward(const Eigen::Ref<const Matrix>& q) const;
  Matrix solve_adjoint(const Eigen::Ref<const Matrix>& q) const;

 private:
  Eigen::MatrixXcd t_;
  Eigen::MatrixXcd u_;
  double rho_ = 0.0;
};

/// X = A X A^T + Q for stable A. Throws UnstableGainError if rho(A) >= 1,
/// NumericalError if the doubling iteration does not converge.
Matrix solve_discrete_lyapunov(const Eigen::Ref<const Matrix>& a,
                               const Eigen::Ref<const Matrix>& q,
                               LyapunovMethod method = LyapunovMethod::kSchur);

}  // namespace blqg
