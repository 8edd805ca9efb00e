#include "blqg/policy_opt.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "blqg/random.hpp"

namespace blqg {

void ArmijoParams::check() const {
  if (!(alpha0 > 0.0)) throw InputFormatError("armijo: alpha0 must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw InputFormatError("armijo: beta must lie in (0, 1)");
  if (!(sigma > 0.0 && sigma < 1.0)) throw InputFormatError("armijo: sigma must lie in (0, 1)");
  if (max_backtracks < 0) throw InputFormatError("armijo: max_backtracks must be >= 0");
}

ArmijoStep armijo_step(const CostChange& change, const Matrix& gradient, const Matrix& point,
                       const ArmijoParams& params) {
  params.check();
  const double g2 = gradient.squaredNorm();
  double alpha = params.alpha0;
  for (int j = 0; j <= params.max_backtracks; ++j) {
    Matrix next = point - alpha * gradient;
    const auto d = change(next);
    if (d && std::isfinite(*d) && *d <= -params.sigma * alpha * g2) {
      return ArmijoStep{alpha, std::move(next), *d, j};
    }
    alpha *= params.beta;
  }
  std::ostringstream msg;
  msg << "line search failed after " << params.max_backtracks << " backtracks (|grad| = "
      << std::sqrt(g2) << ")";
  throw LineSearchError(msg.str());
}

std::string to_string(DescentStatus status) {
  switch (status) {
    case DescentStatus::kGradientVanished:
      return "gradient-vanished";
    case DescentStatus::kMaxIterations:
      return "max-iterations";
    case DescentStatus::kLineSearchFailed:
      return "line-search-failed";
  }
  return "unknown";
}

std::vector<double> DescentTrace::suboptimality_gaps() const {
  if (!reference_cost) throw InputFormatError("trace has no reference cost");
  std::vector<double> gaps;
  gaps.reserve(records.size());
  for (const auto& r : records) gaps.push_back(r.cost - *reference_cost);
  return gaps;
}

void write_trace_csv(std::ostream& os, const DescentTrace& trace) {
  os << "iter,cost,grad_norm,alpha,subopt_gap\n";
  os << std::setprecision(17);
  for (const auto& r : trace.records) {
    os << r.iteration << ',' << r.cost << ',' << r.grad_norm << ',' << r.alpha << ',';
    if (trace.reference_cost) os << r.cost - *trace.reference_cost;
    os << '\n';
  }
}

namespace {

struct Evaluated {
  double cost;
  Matrix gradient;
  CostChange change;
};

// Shared descent loop over a parameter matrix.
template <typename EvalFn>
DescentTrace run_descent(Matrix& point, EvalFn&& evaluate, const DescentOptions& options) {
  options.armijo.check();
  DescentTrace trace;
  trace.reference_cost = options.reference_cost;
  double cost = 0.0;
  for (int i = 0;; ++i) {
    Evaluated ev = evaluate(point);
    if (i == 0) cost = ev.cost;
    const double gnorm = ev.gradient.norm();
    DescentRecord rec{i, cost, gnorm, 0.0};
    if (gnorm <= options.grad_tol) {
      trace.records.push_back(rec);
      trace.status = DescentStatus::kGradientVanished;
      break;
    }
    if (i >= options.max_iters) {
      trace.records.push_back(rec);
      trace.status = DescentStatus::kMaxIterations;
      break;
    }
    try {
      ArmijoStep step = armijo_step(ev.change, ev.gradient, point, options.armijo);
      rec.alpha = step.alpha;
      cost += step.cost_change;
      point = std::move(step.next);
    } catch (const LineSearchError&) {
      trace.records.push_back(rec);
      trace.status = DescentStatus::kLineSearchFailed;
      break;
    }
    trace.records.push_back(rec);
  }
  return trace;
}

// X' Y X'^T - X Y X^T with X' = X + D, formed without cancellation.
Matrix congruence_change(const Matrix& x, const Matrix& y, const Matrix& d) {
  const Matrix dyx = d * y * x.transpose();
  return dyx + dyx.transpose() + d * y * d.transpose();
}

}  // namespace

std::optional<double> gain_cost_change(const BehavioralSystem& bsys, const LqgWeights& weights,
                                       const BehavioralGain& from, const Matrix& p_from,
                                       const BehavioralGain& to) {
  const Matrix ac = bsys.A + bsys.Bu * from.matrix() * bsys.C;
  const Matrix dk = to.matrix() - from.matrix();
  const Matrix da = bsys.Bu * dk * bsys.C;
  try {
    const StableLyapunovSolver solver(ac + da);
    const Matrix dp = solver.solve_forward(congruence_change(ac, p_from, da));
    const Matrix kc = from.matrix() * bsys.C;
    const Matrix dkc = dk * bsys.C;
    const Matrix dq = congruence_change(kc.transpose(), weights.ru, dkc.transpose());
    const Matrix kc_to = to.matrix() * bsys.C;
    const Matrix q_to = bsys.Qz + kc_to.transpose() * weights.ru * kc_to;
    return (q_to * dp).trace() + (dq * p_from).trace();
  } catch (const UnstableGainError&) {
    return std::nullopt;
  }
}

BehavioralDescentResult grad_descent_behavioral(const BehavioralSystem& bsys,
                                                const LqgWeights& weights,
                                                const BehavioralGain& initial,
                                                const BehavioralDescentOptions& options) {
  const SystemDims dims = initial.dims();
  const int k2_col = dims.n * dims.m;
  Matrix point = initial.matrix();
  if (options.freeze_k2) point.middleCols(k2_col, dims.p).setZero();

  auto evaluate = [&](const Matrix& k) {
    const BehavioralGain from(k, dims);
    GainEvaluation ev = evaluate_gain(bsys, from, weights);
    if (options.freeze_k2) ev.gradient.middleCols(k2_col, dims.p).setZero();
    CostChange change = [&bsys, &weights, from, p = ev.P, dims](const Matrix& next) {
      return gain_cost_change(bsys, weights, from, p, BehavioralGain(next, dims));
    };
    return Evaluated{ev.cost, std::move(ev.gradient), std::move(change)};
  };
  DescentTrace trace = run_descent(point, evaluate, options);
  return BehavioralDescentResult{std::move(trace), BehavioralGain(point, dims)};
}

// ---------------------------------------------------------------------------

namespace {

// Monic polynomial coefficients c_0 = 1, ..., c_n with the given roots.
std::vector<double> poly_from_roots(const std::vector<double>& roots) {
  std::vector<double> c{1.0};
  for (double r : roots) {
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = std::move(next);
  }
  return c;
}

Vector random_direction(CounterRng& rng, int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.next_normal();
  return v / v.norm();
}

Matrix ackermann(const Matrix& a, const Vector& b, const std::vector<double>& poles) {
  const auto n = a.rows();
  const Matrix ctrb = controllability_matrix(a, b);
  if (!is_controllable(a, b)) {
    throw NumericalError("pole placement: controllability matrix is singular");
  }
  Eigen::FullPivLU<Matrix> lu(ctrb);
  if (lu.rcond() < 1e-13) {
    throw NumericalError("pole placement: controllability matrix is near-singular");
  }
  const auto c = poly_from_roots(poles);
  Matrix phi = Matrix::Zero(n, n);
  Matrix apow = Matrix::Identity(n, n);
  for (Eigen::Index i = n; i >= 0; --i) {
    phi += c[static_cast<std::size_t>(i)] * apow;
    apow = apow * a;
  }
  Matrix en = Matrix::Zero(1, n);
  en(0, n - 1) = 1.0;
  return en * lu.solve(phi);
}

std::vector<double> sample_poles(CounterRng& rng, int n, double lo, double hi) {
  const double min_gap = 1e-3 * (hi - lo);
  std::vector<double> poles;
  int attempts = 0;
  while (static_cast<int>(poles.size()) < n) {
    if (++attempts > 100000) throw NumericalError("could not draw distinct eigenvalues");
    const double x = lo + (hi - lo) * rng.next_uniform();
    bool distinct = true;
    for (double q : poles) distinct = distinct && std::abs(q - x) >= min_gap;
    if (distinct) poles.push_back(x);
  }
  return poles;
}

}  // namespace

Matrix place_poles(const Matrix& a, const Matrix& b, const std::vector<double>& poles,
                   std::uint64_t seed) {
  if (a.rows() != a.cols() || b.rows() != a.rows() ||
      static_cast<Eigen::Index>(poles.size()) != a.rows()) {
    throw DimensionError("place_poles: inconsistent shapes");
  }
  if (b.cols() == 1) return ackermann(a, b.col(0), poles);
  CounterRng rng(seed);
  const Vector v = random_direction(rng, static_cast<int>(b.cols()));
  return v * ackermann(a, b * v, poles);
}

StabilizingInit stabilizing_init(const LtiSystem& sys, double eig_low, double eig_high,
                                 std::uint64_t seed) {
  if (!(eig_low >= 0.0 && eig_low < eig_high && eig_high < 1.0)) {
    throw InputFormatError("eigenvalue range must satisfy 0 <= low < high < 1");
  }
  const int n = sys.n();
  CounterRng rng(seed);
  StabilizingInit out;
  out.controller_poles = sample_poles(rng, n, eig_low, eig_high);
  out.observer_poles = sample_poles(rng, n, eig_low, eig_high);
  const std::uint64_t sub = rng.next_u64();

  const Matrix& a = sys.a();
  const Matrix& c = sys.c();
  out.state_feedback = place_poles(a, sys.b(), out.controller_poles, sub);
  out.observer_gain =
      place_poles(a.transpose(), (c * a).transpose(), out.observer_poles, sub + 1).transpose();

  const Matrix eye = Matrix::Identity(n, n);
  const Matrix& k = out.state_feedback;
  const Matrix& l = out.observer_gain;
  DynamicController& ctrl = out.controller;
  ctrl.E = (eye - l * c) * (a - sys.b() * k);
  ctrl.F = ctrl.E * l;
  ctrl.G = -k;
  ctrl.H = -k * l;

  const double rho_dyn = spectral_radius(compensator_closed_loop(sys, ctrl));
  if (rho_dyn >= 1.0) {
    throw UnstableGainError("pole placement produced an unstable compensator loop", rho_dyn);
  }
  out.gain = staticize(ctrl, sys.dims());
  const BehavioralSystem bsys = lift_system(sys);
  const double rho =
      spectral_radius(bsys.A + bsys.Bu * out.gain.matrix() * bsys.C);
  if (rho >= 1.0) {
    throw UnstableGainError("initial behavioral gain is not stabilizing", rho);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct AugmentedLoop {
  Matrix abar;  ///< [A + BHC, BG; FC, E]
  Matrix nmat;  ///< [BH; F], measurement-noise input
  Matrix lmat;  ///< [HC, G], u = L [x; x_c] + H v
};

AugmentedLoop augmented_loop(const LtiSystem& sys, const DynamicController& ctrl) {
  const int n = sys.n(), nc = ctrl.order();
  AugmentedLoop l;
  l.abar = compensator_closed_loop(sys, ctrl);
  l.nmat.resize(n + nc, sys.p());
  l.nmat << sys.b() * ctrl.H, ctrl.F;
  l.lmat.resize(sys.m(), n + nc);
  l.lmat << ctrl.H * sys.c(), ctrl.G;
  return l;
}

}  // namespace

CompensatorCost compensator_cost(const LtiSystem& sys, const LqgWeights& weights,
                                 const DynamicController& ctrl, bool with_gradient) {
  const int n = sys.n(), nc = ctrl.order();
  const Matrix& b = sys.b();
  const Matrix& c = sys.c();
  const AugmentedLoop loop = augmented_loop(sys, ctrl);
  const Matrix& abar = loop.abar;
  const Matrix& nmat = loop.nmat;
  const Matrix& lmat = loop.lmat;
  const StableLyapunovSolver solver(abar);

  Matrix wbar = nmat * sys.rv() * nmat.transpose();
  wbar.topLeftCorner(n, n) += sys.qw();
  Matrix qbar = lmat.transpose() * weights.ru * lmat;
  qbar.topLeftCorner(n, n) += weights.qx;

  CompensatorCost out;
  out.sigma = symmetrize(solver.solve_forward(wbar));
  const Matrix& sigma = out.sigma;
  out.spectral_radius = solver.spectral_radius();
  out.cost = (qbar * sigma).trace() +
             (weights.ru * ctrl.H * sys.rv() * ctrl.H.transpose()).trace();
  if (!with_gradient) return out;

  const Matrix lambda = symmetrize(solver.solve_adjoint(qbar));
  const Matrix d = 2.0 * lambda * abar * sigma;
  const Matrix dn = 2.0 * lambda * nmat * sys.rv();
  const Matrix dl = 2.0 * weights.ru * lmat * sigma;
  DynamicController& g = out.gradient;
  g.E = d.bottomRightCorner(nc, nc);
  g.F = d.bottomLeftCorner(nc, n) * c.transpose() + dn.bottomRows(nc);
  g.G = b.transpose() * d.topRightCorner(n, nc) + dl.rightCols(nc);
  g.H = b.transpose() * d.topLeftCorner(n, n) * c.transpose() + b.transpose() * dn.topRows(n) +
        dl.leftCols(n) * c.transpose() + 2.0 * weights.ru * ctrl.H * sys.rv();
  return out;
}

std::optional<double> compensator_cost_change(const LtiSystem& sys, const LqgWeights& weights,
                                              const DynamicController& from,
                                              const Matrix& sigma_from,
                                              const DynamicController& to) {
  const int n = sys.n();
  const AugmentedLoop a = augmented_loop(sys, from);
  const AugmentedLoop b = augmented_loop(sys, to);
  // Differences of the affine pieces are formed from the parameter changes.
  const DynamicController delta{to.E - from.E, to.F - from.F, to.G - from.G, to.H - from.H};
  const AugmentedLoop d = augmented_loop(sys, delta);
  Matrix dabar = d.abar;
  dabar.topLeftCorner(n, n) -= sys.a();
  try {
    const StableLyapunovSolver solver(b.abar);
    const Matrix forcing = congruence_change(a.abar, sigma_from, dabar) +
                           congruence_change(a.nmat, sys.rv(), d.nmat);
    const Matrix dsigma = solver.solve_forward(forcing);
    Matrix q_to = b.lmat.transpose() * weights.ru * b.lmat;
    q_to.topLeftCorner(n, n) += weights.qx;
    const Matrix dq = congruence_change(a.lmat.transpose(), weights.ru, d.lmat.transpose());
    const Matrix dh = congruence_change(from.H, sys.rv(), delta.H);
    return (q_to * dsigma).trace() + (dq * sigma_from).trace() + (weights.ru * dh).trace();
  } catch (const UnstableGainError&) {
    return std::nullopt;
  }
}

Matrix pack_controller(const DynamicController& ctrl) {
  Matrix out(ctrl.E.size() + ctrl.F.size() + ctrl.G.size() + ctrl.H.size(), 1);
  Eigen::Index at = 0;
  for (const Matrix* m : {&ctrl.E, &ctrl.F, &ctrl.G, &ctrl.H}) {
    out.middleRows(at, m->size()) = m->reshaped();
    at += m->size();
  }
  return out;
}

DynamicController unpack_controller(const Matrix& packed, int order, int m, int p) {
  const Eigen::Index total = order * order + order * p + m * order + m * p;
  if (packed.size() != total) throw DimensionError("packed controller has the wrong length");
  DynamicController out;
  Eigen::Index at = 0;
  auto take = [&](Matrix& dst, int rows, int cols) {
    dst = packed.reshaped().segment(at, rows * cols).reshaped(rows, cols);
    at += rows * cols;
  };
  take(out.E, order, order);
  take(out.F, order, p);
  take(out.G, m, order);
  take(out.H, m, p);
  return out;
}

double compensator_gradient_check(const LtiSystem& sys, const LqgWeights& weights,
                                  const DynamicController& ctrl, double h) {
  const int nc = ctrl.order(), m = sys.m(), p = sys.p();
  const CompensatorCost base = compensator_cost(sys, weights, ctrl);
  const Matrix g = pack_controller(base.gradient);
  Matrix theta = pack_controller(ctrl);
  auto central = [&](Eigen::Index i, double step) {
    const double orig = theta(i, 0);
    theta(i, 0) = orig + step;
    const double up = compensator_cost(sys, weights, unpack_controller(theta, nc, m, p), false).cost;
    theta(i, 0) = orig - step;
    const double dn = compensator_cost(sys, weights, unpack_controller(theta, nc, m, p), false).cost;
    theta(i, 0) = orig;
    return (up - dn) / (2.0 * step);
  };
  Matrix fd(theta.rows(), 1);
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    fd(i, 0) = (4.0 * central(i, 0.5 * h) - central(i, h)) / 3.0;
  }
  return (fd - g).norm() / (g.norm() + 1e-4 * (1.0 + std::abs(base.cost)));
}

DynamicDescentResult grad_descent_dynamic(const LtiSystem& sys, const LqgWeights& weights,
                                          const DynamicController& initial,
                                          const DescentOptions& options) {
  initial.check(sys.m(), sys.p());
  const int nc = initial.order(), m = sys.m(), p = sys.p();
  DynamicDescentResult out;
  out.self_check_error = compensator_gradient_check(sys, weights, initial);
  if (!(out.self_check_error <= 1e-5)) {
    std::ostringstream msg;
    msg << "compensator gradient disagrees with finite differences (relative error "
        << out.self_check_error << ")";
    throw NumericalError(msg.str());
  }
  Matrix point = pack_controller(initial);
  auto evaluate = [&](const Matrix& theta) {
    const DynamicController from = unpack_controller(theta, nc, m, p);
    CompensatorCost c = compensator_cost(sys, weights, from);
    CostChange change = [&sys, &weights, from, sigma = c.sigma, nc, m, p](const Matrix& next) {
      return compensator_cost_change(sys, weights, from, sigma, unpack_controller(next, nc, m, p));
    };
    return Evaluated{c.cost, pack_controller(c.gradient), std::move(change)};
  };
  out.trace = run_descent(point, evaluate, options);
  out.controller = unpack_controller(point, nc, m, p);
  return out;
}

}  // namespace blqg
