#include "blqg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "blqg/errors.hpp"

namespace blqg {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

int rank_from_singular_values(const Vector& sv, double tolerance) {
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tolerance) ++r;
  }
  return r;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix lyapunov_kronecker(const Matrix& a, const Matrix& q) {
  const Eigen::Index d = a.rows();
  const Matrix lhs = Matrix::Identity(d * d, d * d) - kron(a, a);
  const Vector rhs = Eigen::Map<const Vector>(q.data(), d * d);
  const Vector x = lhs.partialPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(x.data(), d, d);
}

Matrix lyapunov_doubling(const Matrix& a, const Matrix& q) {
  constexpr int kMaxDoublings = 200;
  constexpr double kTol = 1e-13;
  Matrix x = q;
  Matrix ak = a;
  for (int k = 0; k < kMaxDoublings; ++k) {
    const Matrix increment = ak * x * ak.transpose();
    x += increment;
    if (increment.norm() <= kTol * std::max(x.norm(), kEps)) return x;
    ak = ak * ak;
  }
  throw NumericalError("discrete Lyapunov doubling did not converge within 200 doublings");
}

}  // namespace

double svd_cutoff(const Eigen::Ref<const Matrix>& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return static_cast<double>(std::max(a.rows(), a.cols())) * kEps * smax;
}

Matrix pinv(const Eigen::Ref<const Matrix>& a) {
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff =
      static_cast<double>(std::max(a.rows(), a.cols())) * kEps * (sv.size() ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int rank(const Eigen::Ref<const Matrix>& a, double tolerance) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& sv = svd.singularValues();
  if (tolerance < 0) {
    tolerance = static_cast<double>(std::max(a.rows(), a.cols())) * kEps * sv(0);
  }
  return rank_from_singular_values(sv, tolerance);
}

Matrix sym_sqrt(const Eigen::Ref<const Matrix>& a) {
  if (a.size() == 0) return Matrix(a.rows(), a.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

bool is_symmetric(const Eigen::Ref<const Matrix>& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_psd(const Eigen::Ref<const Matrix>& a, double tol) {
  if (!is_symmetric(a)) return false;
  if (a.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

bool is_pd(const Eigen::Ref<const Matrix>& a) {
  if (!is_symmetric(a)) return false;
  Eigen::LLT<Matrix> llt(symmetrize(a));
  return llt.info() == Eigen::Success;
}

Matrix symmetrize(const Eigen::Ref<const Matrix>& a) {
  return 0.5 * (a + a.transpose());
}

double spectral_radius(const Eigen::Ref<const Matrix>& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix matrix_power(const Eigen::Ref<const Matrix>& a, int k) {
  Matrix out = Matrix::Identity(a.rows(), a.cols());
  for (int i = 0; i < k; ++i) out = out * a;
  return out;
}

Matrix controllability_matrix(const Eigen::Ref<const Matrix>& a,
                              const Eigen::Ref<const Matrix>& b) {
  const Eigen::Index n = a.rows();
  Matrix out(n, n * b.cols());
  Matrix term = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    out.middleCols(k * b.cols(), b.cols()) = term;
    term = a * term;
  }
  return out;
}

Matrix observability_matrix(const Eigen::Ref<const Matrix>& a,
                            const Eigen::Ref<const Matrix>& c) {
  return controllability_matrix(a.transpose(), c.transpose()).transpose();
}

namespace {
bool full_rank_n(const Matrix& m, Eigen::Index n) {
  if (m.size() == 0) return n == 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  const double tol = static_cast<double>(n) * kEps * sv(0);
  return rank_from_singular_values(sv, tol) == n;
}
}  // namespace

bool is_controllable(const Eigen::Ref<const Matrix>& a,
                     const Eigen::Ref<const Matrix>& b) {
  return full_rank_n(controllability_matrix(a, b), a.rows());
}

bool is_observable(const Eigen::Ref<const Matrix>& a,
                   const Eigen::Ref<const Matrix>& c) {
  return full_rank_n(observability_matrix(a, c), a.rows());
}

Matrix range_projector(const Eigen::Ref<const Matrix>& sym) {
  return sym * pinv(sym);
}

// ---------------------------------------------------------------------------

StableLyapunovSolver::StableLyapunovSolver(const Eigen::Ref<const Matrix>& a) {
  if (a.rows() != a.cols()) throw DimensionError("Lyapunov solver needs a square matrix");
  if (a.size() == 0) return;
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) {
    throw NumericalError("complex Schur decomposition failed");
  }
  t_ = schur.matrixT();
  u_ = schur.matrixU();
  rho_ = t_.diagonal().cwiseAbs().maxCoeff();
  if (!(rho_ < 1.0)) {
    std::ostringstream msg;
    msg << "closed-loop matrix is not Schur stable (spectral radius " << rho_ << ")";
    throw UnstableGainError(msg.str(), rho_);
  }
}

// Y = T Y T^H + Qt, T upper triangular. Column j only couples to columns
// l > j, so sweep from the last column backwards.
Matrix StableLyapunovSolver::solve_forward(const Eigen::Ref<const Matrix>& q) const {
  const Eigen::Index d = t_.rows();
  if (q.rows() != d || q.cols() != d) throw DimensionError("Lyapunov right-hand side has wrong shape");
  if (d == 0) return Matrix(0, 0);
  const Eigen::MatrixXcd qt = u_.adjoint() * q.cast<std::complex<double>>() * u_;
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(d, d);
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(d, d);
  for (Eigen::Index j = d - 1; j >= 0; --j) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(d);
    for (Eigen::Index l = j + 1; l < d; ++l) acc += std::conj(t_(j, l)) * y.col(l);
    Eigen::VectorXcd rhs = qt.col(j) + t_ * acc;
    const Eigen::MatrixXcd lhs = eye - std::conj(t_(j, j)) * t_;
    y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  return (u_ * y * u_.adjoint()).real();
}

// Y = T^H Y T + Qt. T^H is lower triangular and column j couples to l < j.
Matrix StableLyapunovSolver::solve_adjoint(const Eigen::Ref<const Matrix>& q) const {
  const Eigen::Index d = t_.rows();
  if (q.rows() != d || q.cols() != d) throw DimensionError("Lyapunov right-hand side has wrong shape");
  if (d == 0) return Matrix(0, 0);
  const Eigen::MatrixXcd qt = u_.adjoint() * q.cast<std::complex<double>>() * u_;
  const Eigen::MatrixXcd th = t_.adjoint();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(d, d);
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(d);
    for (Eigen::Index l = 0; l < j; ++l) acc += t_(l, j) * y.col(l);
    Eigen::VectorXcd rhs = qt.col(j) + th * acc;
    const Eigen::MatrixXcd lhs = eye - t_(j, j) * th;
    y.col(j) = lhs.triangularView<Eigen::Lower>().solve(rhs);
  }
  return (u_ * y * u_.adjoint()).real();
}

Matrix solve_discrete_lyapunov(const Eigen::Ref<const Matrix>& a,
                               const Eigen::Ref<const Matrix>& q,
                               LyapunovMethod method) {
  if (a.rows() != a.cols() || q.rows() != a.rows() || q.cols() != a.cols()) {
    throw DimensionError("discrete Lyapunov: A and Q must be square and of equal size");
  }
  switch (method) {
    case LyapunovMethod::kSchur:
      return StableLyapunovSolver(a).solve_forward(q);
    case LyapunovMethod::kKronecker:
    case LyapunovMethod::kDoubling: {
      const double rho = spectral_radius(a);
      if (!(rho < 1.0)) {
        throw UnstableGainError("discrete Lyapunov: A is not Schur stable", rho);
      }
      return method == LyapunovMethod::kKronecker ? lyapunov_kronecker(a, q)
                                                  : lyapunov_doubling(a, q);
    }
  }
  return {};
}

}  // namespace blqg
