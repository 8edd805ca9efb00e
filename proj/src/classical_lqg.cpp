#include "blqg/classical_lqg.hpp"

#include <algorithm>
#include <sstream>

#include "blqg/errors.hpp"

namespace blqg {

namespace {

double dare_residual(const Matrix& x, const Matrix& a, const Matrix& b, const Matrix& q,
                     const Matrix& r) {
  const Matrix s = r + b.transpose() * x * b;
  const Matrix bxa = b.transpose() * x * a;
  const Matrix res = x - a.transpose() * x * a + bxa.transpose() * s.ldlt().solve(bxa) - q;
  return res.norm() / std::max(x.norm(), std::numeric_limits<double>::min());
}

}  // namespace

DareSolution solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                        const DareOptions& options) {
  const auto n = a.rows(), m = b.cols();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != m ||
      r.cols() != m) {
    throw DimensionError("solve_dare: inconsistent matrix shapes");
  }
  Matrix x = symmetrize(q);
  DareSolution sol;
  bool converged = false;
  for (int k = 1; k <= options.max_iterations; ++k) {
    const Matrix s = r + b.transpose() * x * b;
    Eigen::LLT<Matrix> llt(symmetrize(s));
    if (llt.info() != Eigen::Success) {
      throw NumericalError("solve_dare: R + B'XB is not positive definite");
    }
    const Matrix bxa = b.transpose() * x * a;
    Matrix next = a.transpose() * x * a - bxa.transpose() * llt.solve(bxa) + q;
    next = symmetrize(next);
    const double change = (next - x).norm();
    x = std::move(next);
    sol.iterations = k;
    if (change <= options.tolerance * x.norm() || change == 0.0) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "solve_dare: no convergence within " << options.max_iterations << " iterations";
    throw NumericalError(msg.str());
  }
  const Matrix s = r + b.transpose() * x * b;
  Eigen::LLT<Matrix> llt(symmetrize(s));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("solve_dare: R + B'XB is not positive definite");
  }
  sol.X = x;
  sol.gain = llt.solve(b.transpose() * x * a);
  sol.residual = x.norm() > 0.0 ? dare_residual(x, a, b, q, r) : (q.norm() > 0.0 ? 1.0 : 0.0);
  if (sol.residual > options.residual_tolerance) {
    std::ostringstream msg;
    msg << "solve_dare: residual " << sol.residual << " exceeds " << options.residual_tolerance;
    throw NumericalError(msg.str());
  }
  return sol;
}

LqgSolution lqg_compensator(const LtiSystem& sys, const LqgWeights& weights) {
  weights.check(sys.dims());
  const Matrix& a = sys.a();
  const Matrix& b = sys.b();
  const Matrix& c = sys.c();
  LqgSolution out;
  out.control = solve_dare(a, b, weights.qx, weights.ru);
  out.filter = solve_dare(a.transpose(), c.transpose(), sys.qw(), sys.rv());
  out.k_lqr = out.control.gain;
  const Matrix& p = out.filter.X;
  const Matrix innovation = c * p * c.transpose() + sys.rv();
  out.k_kf = innovation.ldlt().solve(c * p).transpose();

  const Matrix eye = Matrix::Identity(sys.n(), sys.n());
  out.alt.Ebar = (eye - out.k_kf * c) * (a - b * out.k_lqr);
  out.alt.Fbar = out.k_kf;
  out.alt.Gbar = -out.k_lqr;
  out.controller = convert_alt_form(out.alt);
  return out;
}

DynamicController convert_alt_form(const AltController& alt) {
  if (alt.Ebar.rows() != alt.Ebar.cols() || alt.Fbar.rows() != alt.Ebar.rows() ||
      alt.Gbar.cols() != alt.Ebar.rows()) {
    throw DimensionError("alternative compensator has inconsistent shapes");
  }
  return DynamicController{alt.Ebar, alt.Ebar * alt.Fbar, alt.Gbar, alt.Gbar * alt.Fbar};
}

Matrix rollout_alt_controller(const AltController& alt, const Matrix& outputs,
                              const Vector& initial_state) {
  const auto steps = outputs.cols() - 1;
  Matrix u(alt.Gbar.rows(), std::max<Eigen::Index>(steps, 0));
  Vector xi = initial_state;
  for (Eigen::Index t = 0; t < steps; ++t) {
    u.col(t) = alt.Gbar * xi;
    xi = alt.Ebar * xi + alt.Fbar * outputs.col(t + 1);
  }
  return u;
}

Matrix rollout_controller(const DynamicController& ctrl, const Matrix& outputs,
                          const Vector& initial_state) {
  Matrix u(ctrl.G.rows(), outputs.cols());
  Vector xc = initial_state;
  for (Eigen::Index t = 0; t < outputs.cols(); ++t) {
    u.col(t) = ctrl.G * xc + ctrl.H * outputs.col(t);
    xc = ctrl.E * xc + ctrl.F * outputs.col(t);
  }
  return u;
}

Matrix compensator_closed_loop(const LtiSystem& sys, const DynamicController& ctrl) {
  ctrl.check(sys.m(), sys.p());
  const int n = sys.n(), nc = ctrl.order();
  Matrix out(n + nc, n + nc);
  out.topLeftCorner(n, n) = sys.a() + sys.b() * ctrl.H * sys.c();
  out.topRightCorner(n, nc) = sys.b() * ctrl.G;
  out.bottomLeftCorner(nc, n) = ctrl.F * sys.c();
  out.bottomRightCorner(nc, nc) = ctrl.E;
  return out;
}

}  // namespace blqg
