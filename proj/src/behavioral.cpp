#include "blqg/behavioral.hpp"

#include <cmath>
#include <sstream>

#include "blqg/errors.hpp"

namespace blqg {

namespace {

// Toeplitz blocks of the output window: block (i, j) = C A^{i-1-j} X for
// j < i, i = 0..n. X is B (inputs) or I (process noise).
Matrix window_toeplitz(const Matrix& a, const Matrix& c, const Matrix& x, int n) {
  const auto p = c.rows(), k = x.cols();
  Matrix out = Matrix::Zero((n + 1) * p, n * k);
  for (int i = 1; i <= n; ++i) {
    for (int j = 0; j < i; ++j) {
      out.block(i * p, j * k, p, k) = c * matrix_power(a, i - 1 - j) * x;
    }
  }
  return out;
}

// [C A^n X ... C A X]
Matrix next_output_row(const Matrix& a, const Matrix& c, const Matrix& x, int n) {
  const auto p = c.rows(), k = x.cols();
  Matrix out(p, n * k);
  for (int j = 0; j < n; ++j) out.block(0, j * k, p, k) = c * matrix_power(a, n - j) * x;
  return out;
}

// [A^{n-1} X ... X]
Matrix state_row(const Matrix& a, const Matrix& x, int n) {
  const auto rows = a.rows(), k = x.cols();
  Matrix out(rows, n * k);
  for (int j = 0; j < n; ++j) out.block(0, j * k, rows, k) = matrix_power(a, n - 1 - j) * x;
  return out;
}

Matrix observability_window(const LtiSystem& sys) {
  const int n = sys.n();
  Matrix o((n + 1) * sys.p(), n);
  Matrix term = sys.c();
  for (int i = 0; i <= n; ++i) {
    o.middleRows(i * sys.p(), sys.p()) = term;
    term = term * sys.a();
  }
  if (rank(o) < n) {
    std::ostringstream msg;
    msg << "observability matrix has rank " << rank(o) << " < n = " << n
        << "; (A,C) must be observable";
    throw AssumptionError(msg.str());
  }
  return o;
}

Matrix closed_loop(const BehavioralSystem& bsys, const BehavioralGain& gain) {
  if (!(gain.dims() == bsys.dims)) throw DimensionError("gain does not match the lifted system");
  return bsys.A + bsys.Bu * gain.matrix() * bsys.C;
}

Matrix noise_covariance(const BehavioralSystem& bsys) {
  return bsys.Bw * bsys.Qw * bsys.Bw.transpose() + bsys.Bv * bsys.Rv * bsys.Bv.transpose();
}

Matrix gain_weight(const BehavioralSystem& bsys, const BehavioralGain& gain,
                   const LqgWeights& weights) {
  if (bsys.Qz.size() == 0) throw DimensionError("lifted system has no cost attached");
  const Matrix kc = gain.matrix() * bsys.C;
  return bsys.Qz + kc.transpose() * weights.ru * kc;
}

}  // namespace

BlockLayout BlockLayout::for_dims(const SystemDims& d) {
  BlockLayout l;
  l.u_offset = 0;
  l.u_size = d.n * d.m;
  l.y_offset = l.u_size;
  l.y_size = (d.n + 1) * d.p;
  l.w_offset = l.y_offset + l.y_size;
  l.w_size = d.n * d.n;
  l.v_offset = l.w_offset + l.w_size;
  l.v_size = (d.n + 1) * d.p;
  return l;
}

BehavioralSystem lift_system(const LtiSystem& sys) {
  const int n = sys.n(), m = sys.m(), p = sys.p();
  const Matrix& a = sys.a();
  const Matrix& b = sys.b();
  const Matrix& c = sys.c();
  const Matrix eye_n = Matrix::Identity(n, n);

  const Matrix obs = observability_window(sys);
  const Matrix obs_pinv = pinv(obs);
  const Matrix f1 = window_toeplitz(a, c, b, n);
  const Matrix f2 = next_output_row(a, c, b, n);
  const Matrix f3 = window_toeplitz(a, c, eye_n, n);
  const Matrix f4 = next_output_row(a, c, eye_n, n);
  const Matrix predictor = c * matrix_power(a, n + 1) * obs_pinv;

  BehavioralSystem out;
  out.dims = sys.dims();
  out.layout = BlockLayout::for_dims(out.dims);
  const BlockLayout& l = out.layout;
  const int dz = l.state_dim(), dy = l.history_dim();

  out.Au = f2 - predictor * f1;
  out.Ay = predictor;
  out.Aw = f4 - predictor * f3;
  out.Av = -predictor;

  out.A = Matrix::Zero(dz, dz);
  // Each window shifts up by one sample; the newest sample enters from the
  // inputs (u, w, v) or from the one-step output predictor (y).
  auto shift = [&out](int offset, int size, int width) {
    for (int i = 0; i + width < size; i += width) {
      out.A.block(offset + i, offset + i + width, width, width).setIdentity();
    }
  };
  shift(l.u_offset, l.u_size, m);
  shift(l.y_offset, l.y_size, p);
  shift(l.w_offset, l.w_size, n);
  shift(l.v_offset, l.v_size, p);
  const int y_last = l.y_offset + n * p;
  out.A.block(y_last, l.u_offset, p, l.u_size) = out.Au;
  out.A.block(y_last, l.y_offset, p, l.y_size) = out.Ay;
  out.A.block(y_last, l.w_offset, p, l.w_size) = out.Aw;
  out.A.block(y_last, l.v_offset, p, l.v_size) = out.Av;

  out.Bu = Matrix::Zero(dz, m);
  out.Bu.block(l.u_offset + (n - 1) * m, 0, m, m).setIdentity();
  out.Bu.block(y_last, 0, p, m) = c * b;

  out.Bw = Matrix::Zero(dz, n);
  out.Bw.block(y_last, 0, p, n) = c;
  out.Bw.block(l.w_offset + (n - 1) * n, 0, n, n).setIdentity();

  out.Bv = Matrix::Zero(dz, p);
  out.Bv.block(y_last, 0, p, p).setIdentity();
  out.Bv.block(l.v_offset + n * p, 0, p, p).setIdentity();

  out.C = Matrix::Zero(dy, dz);
  out.C.leftCols(dy).setIdentity();

  const Matrix an_opinv = matrix_power(a, n) * obs_pinv;
  out.H.resize(n, dz);
  out.H.middleCols(l.u_offset, l.u_size) = state_row(a, b, n) - an_opinv * f1;
  out.H.middleCols(l.y_offset, l.y_size) = an_opinv;
  out.H.middleCols(l.w_offset, l.w_size) = state_row(a, eye_n, n) - an_opinv * f3;
  out.H.middleCols(l.v_offset, l.v_size) = -an_opinv;

  out.Qw = sys.qw();
  out.Rv = sys.rv();
  return out;
}

Matrix lift_cost(const LtiSystem& sys, const LqgWeights& weights) {
  weights.check(sys.dims());
  const BehavioralSystem bsys = lift_system(sys);
  return symmetrize(bsys.H.transpose() * weights.qx * bsys.H);
}

BehavioralSystem lift_problem(const LtiSystem& sys, const LqgWeights& weights) {
  weights.check(sys.dims());
  BehavioralSystem bsys = lift_system(sys);
  bsys.Qz = symmetrize(bsys.H.transpose() * weights.qx * bsys.H);
  return bsys;
}

// ---------------------------------------------------------------------------

StaticizationMap staticization_map(const DynamicController& ctrl, const SystemDims& dims) {
  ctrl.check(dims.m, dims.p);
  const int n = dims.n, m = dims.m, p = dims.p, nc = ctrl.order();
  StaticizationMap map;
  std::vector<Matrix> ge(n + 1);  // G E^k
  ge[0] = ctrl.G;
  for (int k = 1; k <= n; ++k) ge[k] = ge[k - 1] * ctrl.E;

  map.T1.resize(n * m, nc);
  for (int k = 0; k < n; ++k) map.T1.middleRows(k * m, m) = ge[k];
  map.GEn = ge[n];

  map.T2.resize(m, (n + 1) * p);
  for (int j = 0; j < n; ++j) map.T2.middleCols(j * p, p) = ge[n - 1 - j] * ctrl.F;
  map.T2.middleCols(n * p, p) = ctrl.H;

  map.M = Matrix::Zero(n * m, (n + 1) * p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) map.M.block(i * m, j * p, m, p) = ge[i - 1 - j] * ctrl.F;
    map.M.block(i * m, i * p, m, p) = ctrl.H;
  }
  map.t1_rank = rank(map.T1);
  return map;
}

BehavioralGain staticize(const DynamicController& ctrl, const SystemDims& dims) {
  const StaticizationMap map = staticization_map(ctrl, dims);
  if (map.t1_rank < ctrl.order()) {
    std::ostringstream msg;
    msg << "staticize: [G; GE; ...; GE^{n-1}] has rank " << map.t1_rank
        << ", full column rank " << ctrl.order() << " is required";
    throw AssumptionError(msg.str());
  }
  const Matrix head = map.GEn * pinv(map.T1);
  Matrix k(dims.m, dims.history_dim());
  k.leftCols(dims.n * dims.m) = head;
  k.rightCols((dims.n + 1) * dims.p) = map.T2 - head * map.M;
  return BehavioralGain(std::move(k), dims);
}

Vector reconstruct_controller_state(const StaticizationMap& map, const Vector& u_window,
                                    const Vector& y_window) {
  return pinv(map.T1) * (u_window - map.M * y_window);
}

// ---------------------------------------------------------------------------

GainCost cost_of_gain(const BehavioralSystem& bsys, const BehavioralGain& gain,
                      const LqgWeights& weights, LyapunovMethod method) {
  const Matrix ac = closed_loop(bsys, gain);
  const Matrix qk = gain_weight(bsys, gain, weights);
  GainCost out;
  if (method == LyapunovMethod::kSchur) {
    const StableLyapunovSolver solver(ac);
    out.spectral_radius = solver.spectral_radius();
    out.P = solver.solve_forward(noise_covariance(bsys));
  } else {
    out.spectral_radius = spectral_radius(ac);
    out.P = solve_discrete_lyapunov(ac, noise_covariance(bsys), method);
  }
  out.P = symmetrize(out.P);
  out.cost = (qk * out.P).trace();
  return out;
}

GainEvaluation evaluate_gain(const BehavioralSystem& bsys, const BehavioralGain& gain,
                             const LqgWeights& weights) {
  const Matrix ac = closed_loop(bsys, gain);
  const Matrix qk = gain_weight(bsys, gain, weights);
  const StableLyapunovSolver solver(ac);
  GainEvaluation out;
  out.spectral_radius = solver.spectral_radius();
  out.P = symmetrize(solver.solve_forward(noise_covariance(bsys)));
  out.M = symmetrize(solver.solve_adjoint(qk));
  out.cost = (qk * out.P).trace();
  const Matrix pct = out.P * bsys.C.transpose();
  out.gradient = 2.0 * (weights.ru * gain.matrix() * bsys.C * pct +
                        bsys.Bu.transpose() * out.M * ac * pct);
  return out;
}

Matrix gradient_of_gain(const BehavioralSystem& bsys, const BehavioralGain& gain,
                        const LqgWeights& weights) {
  return evaluate_gain(bsys, gain, weights).gradient;
}

RiccatiPair coupled_riccati_residuals(const BehavioralSystem& bsys, const LqgWeights& weights,
                                      const Matrix& M, const Matrix& P) {
  const Matrix& a = bsys.A;
  const Matrix& bu = bsys.Bu;
  const Matrix& c = bsys.C;
  const Eigen::Index dz = a.rows();
  const Matrix eye = Matrix::Identity(dz, dz);

  RiccatiPair out;
  out.M = M;
  out.P = P;
  out.S_M = (weights.ru + bu.transpose() * M * bu).inverse();
  out.S_P = pinv(c * P * c.transpose());

  // M = A'MA - N + Q_z + (I - Psi)' N (I - Psi),  N = A'MB_u S_M B_u'MA,
  // Psi = P C' S_P C.
  const Matrix mba = bu.transpose() * M * a;
  const Matrix n_term = mba.transpose() * out.S_M * mba;
  const Matrix psi = P * c.transpose() * out.S_P * c;
  const Matrix res_m = M - (a.transpose() * M * a - n_term + bsys.Qz +
                            (eye - psi).transpose() * n_term * (eye - psi));

  // P = APA' - Z + W + (I - M B_u S_M B_u')' Z (I - M B_u S_M B_u'),
  // Z = A P C' S_P C P A'.
  const Matrix cpa = c * P * a.transpose();
  const Matrix z_term = cpa.transpose() * out.S_P * cpa;
  const Matrix pi = eye - M * bu * out.S_M * bu.transpose();
  const Matrix res_p = P - (a * P * a.transpose() - z_term + noise_covariance(bsys) +
                            pi.transpose() * z_term * pi);

  out.residual_M = res_m.norm();
  out.residual_P = res_p.norm();
  out.relative_residual_M = out.residual_M / std::max(M.norm(), 1e-300);
  out.relative_residual_P = out.residual_P / std::max(P.norm(), 1e-300);
  return out;
}

Matrix riccati_gain(const BehavioralSystem& bsys, const LqgWeights& weights, const Matrix& M,
                    const Matrix& P) {
  const Matrix s_m = weights.ru + bsys.Bu.transpose() * M * bsys.Bu;
  const Matrix rhs = bsys.Bu.transpose() * M * bsys.A * P * bsys.C.transpose() *
                     pinv(bsys.C * P * bsys.C.transpose());
  return -s_m.ldlt().solve(rhs);
}

BehavioralLqgSolution solve_behavioral_lqg(const LtiSystem& sys, const LqgWeights& weights) {
  const AssumptionReport report = validate_assumptions(sys, weights);
  if (!report.all()) throw AssumptionError("standing assumptions fail: " + report.failures());

  BehavioralLqgSolution out{lift_problem(sys, weights), lqg_compensator(sys, weights), {}, {},
                            0.0, 0.0, 0.0};
  out.gain = staticize(out.classical.controller, sys.dims());
  const GainEvaluation eval = evaluate_gain(out.bsys, out.gain, weights);
  out.cost = eval.cost;
  out.gradient_norm = eval.gradient.norm();
  out.spectral_radius = eval.spectral_radius;
  out.riccati = coupled_riccati_residuals(out.bsys, weights, eval.M, eval.P);
  return out;
}

Matrix gauge_projector(const BehavioralSystem& bsys, const Matrix& P) {
  return range_projector(symmetrize(bsys.C * P * bsys.C.transpose()));
}

// ---------------------------------------------------------------------------

SparsityPartition sparsity_partition(const BehavioralGain& gain) {
  SparsityPartition out{gain.k1(), gain.k2(), gain.k3(), false};
  const double k2_inf = out.K2.size() ? out.K2.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  out.is_sparse = k2_inf <= 1e-8;
  return out;
}

BehavioralState behavioral_state(const Trajectory& traj, int t, const SystemDims& dims) {
  const int n = dims.n, m = dims.m, p = dims.p;
  if (t < n || t > traj.horizon) {
    std::ostringstream msg;
    msg << "behavioral_state: t = " << t << " outside [n, T] = [" << n << ", " << traj.horizon
        << "]";
    throw DimensionError(msg.str());
  }
  const BlockLayout l = BlockLayout::for_dims(dims);
  BehavioralState out;
  out.z.resize(l.state_dim());
  for (int i = 0; i < n; ++i) {
    out.z.segment(l.u_offset + i * m, m) = traj.u.col(t - n + i);
    out.z.segment(l.w_offset + i * n, n) = traj.w.col(t - n + i);
  }
  for (int i = 0; i <= n; ++i) {
    out.z.segment(l.y_offset + i * p, p) = traj.y.col(t - n + i);
    out.z.segment(l.v_offset + i * p, p) = traj.v.col(t - n + i);
  }
  out.yz = out.z.head(l.history_dim());
  return out;
}

Matrix LiftedTrajectory::outputs() const { return z.middleRows(y_row, p); }

LiftedTrajectory simulate_lifted(const BehavioralSystem& bsys, const Trajectory& source,
                                 const std::optional<BehavioralGain>& gain) {
  const int n = bsys.dims.n;
  if (gain && !(gain->dims() == bsys.dims)) {
    throw DimensionError("gain does not match the lifted system");
  }
  LiftedTrajectory out;
  out.t0 = n;
  out.p = bsys.dims.p;
  out.y_row = bsys.layout.y_offset + n * bsys.dims.p;
  const int steps = source.horizon - n;
  if (steps < 0) throw DimensionError("source trajectory shorter than n");
  out.z.resize(bsys.state_dim(), steps + 1);
  out.u = Matrix::Zero(bsys.dims.m, steps);
  Vector z = behavioral_state(source, n, bsys.dims).z;
  out.z.col(0) = z;
  for (int j = 0; j < steps; ++j) {
    const int t = n + j;
    Vector u = Vector::Zero(bsys.dims.m);
    if (gain) u = gain->matrix() * (bsys.C * z);
    out.u.col(j) = u;
    z = bsys.A * z + bsys.Bu * u + bsys.Bw * source.w.col(t) + bsys.Bv * source.v.col(t + 1);
    out.z.col(j + 1) = z;
  }
  return out;
}

}  // namespace blqg
