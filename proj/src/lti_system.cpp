#include "blqg/lti_system.hpp"

#include <cmath>
#include <deque>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "blqg/errors.hpp"
#include "blqg/random.hpp"

namespace blqg {

namespace {

constexpr double kDivergenceThreshold = 1e9;

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << name << " must be " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    throw DimensionError(msg.str());
  }
}

// Produces u(t) from y(t) for one of the supported laws, keeping whatever
// internal state the law needs.
class LawRunner {
 public:
  LawRunner(const LtiSystem& sys, const ControlLaw& law) : sys_(sys), law_(law) {
    if (const auto* comp = std::get_if<CompensatorLaw>(&law_)) {
      comp->controller.check(sys.m(), sys.p());
      xc_ = comp->initial_state.size() ? comp->initial_state
                                       : Vector::Zero(comp->controller.order());
      if (xc_.size() != comp->controller.order()) {
        throw DimensionError("compensator initial state has the wrong size");
      }
    } else if (const auto* beh = std::get_if<BehavioralLaw>(&law_)) {
      if (!(beh->gain.dims() == sys.dims())) {
        throw DimensionError("behavioral gain dimensions do not match the plant");
      }
    }
  }

  Vector act(int t, const Vector& y) {
    if (std::holds_alternative<ZeroInput>(law_)) return Vector::Zero(sys_.m());
    if (const auto* comp = std::get_if<CompensatorLaw>(&law_)) {
      const DynamicController& k = comp->controller;
      Vector u = k.G * xc_ + k.H * y;
      xc_ = k.E * xc_ + k.F * y;
      return u;
    }
    const BehavioralGain& gain = std::get<BehavioralLaw>(law_).gain;
    const int n = sys_.n(), m = sys_.m(), p = sys_.p();
    y_hist_.push_back(y);
    if (static_cast<int>(y_hist_.size()) > n + 1) y_hist_.pop_front();
    Vector u = Vector::Zero(m);
    if (t >= n) {
      Vector yz(gain.dims().history_dim());
      for (int i = 0; i < n; ++i) yz.segment(i * m, m) = u_hist_[i];
      for (int i = 0; i <= n; ++i) yz.segment(n * m + i * p, p) = y_hist_[i];
      u = gain.matrix() * yz;
    }
    u_hist_.push_back(u);
    if (static_cast<int>(u_hist_.size()) > n) u_hist_.pop_front();
    return u;
  }

 private:
  const LtiSystem& sys_;
  const ControlLaw& law_;
  Vector xc_;
  std::deque<Vector> u_hist_;
  std::deque<Vector> y_hist_;
};

void check_divergence(const Vector& x, int t) {
  if (!(x.cwiseAbs().maxCoeff() <= kDivergenceThreshold)) {
    std::ostringstream msg;
    msg << "unstable rollout: state magnitude exceeded " << kDivergenceThreshold << " at t=" << t;
    throw NumericalError(msg.str());
  }
}

// Core loop shared by simulate() and monte_carlo_cost(). `step` receives
// (t, x(t), u(t), y(t), w(t), v(t)); `last` receives (T, x(T), y(T), v(T)).
template <class Step, class Last>
void rollout(const LtiSystem& sys, const ControlLaw& law, int horizon, std::uint64_t seed,
             const SimulationOptions& options, Step&& step, Last&& last) {
  CounterRng rng(seed);
  const GaussianSampler x0_sampler(sys.sigma0());
  const GaussianSampler w_sampler(sys.qw());
  const GaussianSampler v_sampler(sys.rv());
  LawRunner runner(sys, law);

  Vector x = x0_sampler.sample(rng);
  Vector v = v_sampler.sample(rng);
  if (options.x0) {
    if (options.x0->size() != sys.n()) throw DimensionError("x0 has the wrong size");
    x = *options.x0;
  }
  if (options.noiseless) v.setZero();
  Vector y = sys.c() * x + v;

  for (int t = 0; t < horizon; ++t) {
    Vector w = w_sampler.sample(rng);
    Vector v_next = v_sampler.sample(rng);
    if (options.noiseless) {
      w.setZero();
      v_next.setZero();
    }
    const Vector u = runner.act(t, y);
    step(t, x, u, y, w, v);
    x = sys.a() * x + sys.b() * u + w;
    check_divergence(x, t + 1);
    v = std::move(v_next);
    y = sys.c() * x + v;
  }
  last(horizon, x, y, v);
}

}  // namespace

LtiSystem::LtiSystem(Matrix a, Matrix b, Matrix c, Matrix qw, Matrix rv, Matrix sigma0)
    : a_(std::move(a)),
      b_(std::move(b)),
      c_(std::move(c)),
      qw_(std::move(qw)),
      rv_(std::move(rv)),
      sigma0_(std::move(sigma0)) {
  dims_ = {static_cast<int>(a_.rows()), static_cast<int>(b_.cols()),
           static_cast<int>(c_.rows())};
  if (dims_.n <= 0 || dims_.m <= 0 || dims_.p <= 0) {
    throw DimensionError("system dimensions n, m, p must be positive");
  }
  require_shape(a_, dims_.n, dims_.n, "A");
  require_shape(b_, dims_.n, dims_.m, "B");
  require_shape(c_, dims_.p, dims_.n, "C");
  require_shape(qw_, dims_.n, dims_.n, "Q_w");
  require_shape(rv_, dims_.p, dims_.p, "R_v");
  require_shape(sigma0_, dims_.n, dims_.n, "Sigma0");
  if (!is_psd(qw_)) throw AssumptionError("Q_w must be symmetric positive semidefinite");
  if (!is_pd(rv_)) throw AssumptionError("R_v must be symmetric positive definite");
  if (!is_psd(sigma0_)) throw AssumptionError("Sigma0 must be symmetric positive semidefinite");
}

LtiSystem::LtiSystem(Matrix a, Matrix b, Matrix c, Matrix qw, Matrix rv)
    : LtiSystem(a, std::move(b), std::move(c), std::move(qw), std::move(rv),
                Matrix::Identity(a.rows(), a.rows())) {}

void LqgWeights::check(const SystemDims& dims) const {
  require_shape(qx, dims.n, dims.n, "Q_x");
  require_shape(ru, dims.m, dims.m, "R_u");
  if (!is_psd(qx)) throw AssumptionError("Q_x must be symmetric positive semidefinite");
  if (!is_pd(ru)) throw AssumptionError("R_u must be symmetric positive definite");
}

std::string AssumptionReport::failures() const {
  std::string out;
  auto add = [&out](bool ok, const char* name) {
    if (ok) return;
    if (!out.empty()) out += ", ";
    out += name;
  };
  add(controllable_ab, "(A,B) controllable");
  add(controllable_a_qw, "(A,Q_w^1/2) controllable");
  add(observable_ac, "(A,C) observable");
  add(observable_a_qx, "(A,Q_x^1/2) observable");
  return out;
}

AssumptionReport validate_assumptions(const LtiSystem& sys, const LqgWeights& weights) {
  weights.check(sys.dims());
  AssumptionReport report;
  report.controllable_ab = is_controllable(sys.a(), sys.b());
  report.controllable_a_qw = is_controllable(sys.a(), sym_sqrt(sys.qw()));
  report.observable_ac = is_observable(sys.a(), sys.c());
  report.observable_a_qx = is_observable(sys.a(), sym_sqrt(weights.qx));
  return report;
}

Trajectory simulate(const LtiSystem& sys, const ControlLaw& law, int horizon,
                    std::uint64_t seed, const SimulationOptions& options) {
  if (horizon < 1) throw DimensionError("simulation horizon must be >= 1");
  Trajectory traj;
  traj.horizon = horizon;
  traj.seed = seed;
  traj.x.resize(sys.n(), horizon + 1);
  traj.u.resize(sys.m(), horizon);
  traj.y.resize(sys.p(), horizon + 1);
  traj.w.resize(sys.n(), horizon);
  traj.v.resize(sys.p(), horizon + 1);
  rollout(
      sys, law, horizon, seed, options,
      [&](int t, const Vector& x, const Vector& u, const Vector& y, const Vector& w,
          const Vector& v) {
        traj.x.col(t) = x;
        traj.u.col(t) = u;
        traj.y.col(t) = y;
        traj.w.col(t) = w;
        traj.v.col(t) = v;
      },
      [&](int t, const Vector& x, const Vector& y, const Vector& v) {
        traj.x.col(t) = x;
        traj.y.col(t) = y;
        traj.v.col(t) = v;
      });
  return traj;
}

MonteCarloEstimate monte_carlo_cost(const LtiSystem& sys, const ControlLaw& law,
                                    const LqgWeights& weights, int horizon, int trials,
                                    std::uint64_t seed) {
  if (horizon < 1 || trials < 1) throw DimensionError("horizon and trials must be >= 1");
  weights.check(sys.dims());
  std::vector<double> averages(trials);
  for (int i = 0; i < trials; ++i) {
    double sum = 0.0;
    rollout(
        sys, law, horizon, seed + static_cast<std::uint64_t>(i), SimulationOptions{},
        [&](int, const Vector& x, const Vector& u, const Vector&, const Vector&, const Vector&) {
          sum += x.dot(weights.qx * x) + u.dot(weights.ru * u);
        },
        [](int, const Vector&, const Vector&, const Vector&) {});
    averages[i] = sum / horizon;
  }
  MonteCarloEstimate est;
  est.trials = trials;
  for (double a : averages) est.mean += a;
  est.mean /= trials;
  if (trials > 1) {
    double ss = 0.0;
    for (double a : averages) ss += (a - est.mean) * (a - est.mean);
    est.std_error = std::sqrt(ss / (trials - 1) / trials);
  } else {
    est.std_error = std::numeric_limits<double>::quiet_NaN();
  }
  return est;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto n = traj.x.rows(), m = traj.u.rows(), p = traj.y.rows();
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
  for (Eigen::Index i = 1; i <= m; ++i) os << ",u" << i;
  for (Eigen::Index i = 1; i <= p; ++i) os << ",y" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",w" << i;
  for (Eigen::Index i = 1; i <= p; ++i) os << ",v" << i;
  os << '\n';
  const auto old_precision = os.precision(17);
  for (int t = 0; t <= traj.horizon; ++t) {
    const bool last = t == traj.horizon;
    os << t;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << traj.x(i, t);
    for (Eigen::Index i = 0; i < m; ++i) {
      os << ',';
      if (!last) os << traj.u(i, t);
    }
    for (Eigen::Index i = 0; i < p; ++i) os << ',' << traj.y(i, t);
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ',';
      if (!last) os << traj.w(i, t);
    }
    for (Eigen::Index i = 0; i < p; ++i) os << ',' << traj.v(i, t);
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace blqg
