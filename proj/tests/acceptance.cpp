// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "blqg/behavioral.hpp"
#include "blqg/classical_lqg.hpp"
#include "blqg/experiments.hpp"
#include "blqg/imitation.hpp"
#include "blqg/policy_opt.hpp"
#include "blqg/serialization.hpp"
#include "support.hpp"

using namespace blqg;
using namespace blqg::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = seconds_since(t0);
  if (!o.pass) ++failures;
  std::printf("criterion %d: %s  %s  (%s; %.2f s)\n", id, o.pass ? "PASS" : "FAIL", name.c_str(),
              o.detail.c_str(), s);
  std::fflush(stdout);
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

double entry_error(const Matrix& got, std::initializer_list<double> want) {
  double worst = 0.0;
  auto it = want.begin();
  for (int i = 0; i < got.rows(); ++i)
    for (int j = 0; j < got.cols(); ++j) worst = std::max(worst, std::abs(got(i, j) - *it++));
  return worst;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = fs::temp_directory_path() / "blqg_acceptance_solve";
  fs::remove_all(dir);
  const ExperimentConfig cfg = parse_config(Json::parse(R"({
    "system": {"A": [[1.1]], "B": [[1]], "C": [[1]], "Qw": [[0.5]], "Rv": [[0.8]]},
    "weights": {"Qx": [[1]], "Ru": [[1]]}})"));
  std::ostringstream sink;
  CommandOptions opts;
  opts.out_dir = dir.string();
  opts.out = &sink;
  opts.err = &sink;
  if (cmd_solve(cfg, opts) != kExitOk) return {false, "cmd_solve failed: " + sink.str()};
  const double elapsed = seconds_since(t0);
  const Json c = read_json(dir / "classical.json");
  const Json g = read_json(dir / "gain.json");
  const Json& l = c["lifted"];
  double worst = 0.0;
  worst = std::max(worst, entry_error(matrix_from_json(c["K_lqr"]), {0.7034}));
  worst = std::max(worst, entry_error(matrix_from_json(c["E"]), {0.1716}));
  worst = std::max(worst, entry_error(matrix_from_json(c["F"]), {0.0973}));
  worst = std::max(worst, entry_error(matrix_from_json(c["G"]), {-0.7034}));
  worst = std::max(worst, entry_error(matrix_from_json(c["H"]), {-0.3991}));
  worst = std::max(worst, entry_error(matrix_from_json(l["Au"]), {0.4977}));
  worst = std::max(worst, entry_error(matrix_from_json(l["Ay"]), {0.5475, 0.6023}));
  worst = std::max(worst, entry_error(matrix_from_json(l["Av"]), {-0.5475, -0.6023}));
  worst = std::max(worst, entry_error(gain_from_json(g).matrix(), {0.1716, 0.0, -0.3991}));
  const double kkf = matrix_from_json(c["K_kf"])(0, 0);
  const bool ok = worst <= 5e-4 && std::abs(kkf - 0.5674) <= 5e-4 && elapsed < 1.0;
  return {ok, "max entry error " + fmt("%.2e", worst) + " <= 5e-4, K_kf " + fmt("%.4f", kkf) +
                  " vs 0.5674, solve " + fmt("%.3f", elapsed) + " s < 1 s"};
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const LtiSystem sys = example1();
  const BehavioralSystem b = lift_system(sys);
  const int n = sys.n();

  const Trajectory free = simulate(sys, ZeroInput{}, 50, 2024);
  const Matrix yl = simulate_lifted(b, free, std::nullopt).outputs();
  double free_dev = 0.0;
  for (int j = 0; j < yl.cols(); ++j) free_dev = std::max(free_dev, std::abs(yl(0, j) - free.y(0, n + j)));

  const LqgSolution lqg = lqg_compensator(sys, example1_weights());
  const BehavioralGain k = staticize(lqg.controller, sys.dims());
  const Trajectory closed = simulate(sys, CompensatorLaw{lqg.controller, Vector()}, 50, 2024);
  const Matrix yk = simulate_lifted(b, closed, k).outputs();
  double loop_dev = 0.0;
  for (int j = 0; j < yk.cols(); ++j) loop_dev = std::max(loop_dev, std::abs(yk(0, j) - closed.y(0, n + j)));
  const double elapsed = seconds_since(t0);
  const bool ok = free_dev <= 1e-10 && loop_dev <= 1e-8 && elapsed < 1.0;
  return {ok, "free " + fmt("%.2e", free_dev) + " <= 1e-10, closed loop " + fmt("%.2e", loop_dev) +
                  " <= 1e-8 over 50 steps, t >= n"};
}

Outcome criterion3() {
  std::string detail;
  bool ok = true;
  for (const bool ex4 : {false, true}) {
    const BehavioralLqgSolution s = ex4 ? solve_behavioral_lqg(example4(), example4_weights())
                                        : solve_behavioral_lqg(example1(), example1_weights());
    const double bound = 1e-7 * (1.0 + s.gain.matrix().norm());
    ok = ok && s.riccati.relative_residual_M <= 1e-7 && s.riccati.relative_residual_P <= 1e-7 &&
         s.gradient_norm <= bound;
    detail += std::string(ex4 ? "; Ex4" : "Ex1") + " res M " + fmt("%.1e", s.riccati.relative_residual_M) +
              ", res P " + fmt("%.1e", s.riccati.relative_residual_P) + " <= 1e-7, |grad| " +
              fmt("%.1e", s.gradient_norm) + " <= " + fmt("%.1e", bound);
  }
  return {ok, detail};
}

Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  for (const bool ex4 : {false, true}) {
    const LtiSystem sys = ex4 ? example4() : example1();
    const LqgWeights w = ex4 ? example4_weights() : example1_weights();
    const BehavioralLqgSolution s = solve_behavioral_lqg(sys, w);
    const MonteCarloEstimate mc = monte_carlo_cost(sys, BehavioralLaw{s.gain}, w, 100000, 20, 4000);
    const double z = std::abs(mc.mean - s.cost) / mc.std_error;
    ok = ok && z <= 3.0;
    detail += std::string(ex4 ? "; Ex4" : "Ex1") + " MC " + fmt("%.4f", mc.mean) + " vs " +
              fmt("%.4f", s.cost) + " (" + fmt("%.2f", z) + " SE <= 3)";
  }
  const double elapsed = seconds_since(t0);
  ok = ok && elapsed < 30.0;
  return {ok, detail + ", " + fmt("%.1f", elapsed) + " s < 30 s"};
}

double cost(const BehavioralSystem& b, const LqgWeights& w, const Matrix& k) {
  return cost_of_gain(b, BehavioralGain(k, b.dims), w).cost;
}

double central(const BehavioralSystem& b, const LqgWeights& w, const Matrix& k, int i, int j,
               double h) {
  Matrix kp = k, km = k;
  kp(i, j) += h;
  km(i, j) -= h;
  return (cost(b, w, kp) - cost(b, w, km)) / (2.0 * h);
}

Outcome criterion5() {
  const double h = 1e-5;
  double worst = 0.0, worst_plain = 0.0;
  int gains = 0;
  for (const bool ex4 : {false, true}) {
    const LtiSystem sys = ex4 ? example4() : example1();
    const LqgWeights w = ex4 ? example4_weights() : example1_weights();
    const BehavioralSystem b = lift_problem(sys, w);
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      const BehavioralGain k = stabilizing_init(sys, 0.45, 0.92, seed).gain;
      const Matrix g = gradient_of_gain(b, k, w);
      for (int i = 0; i < g.rows(); ++i) {
        for (int j = 0; j < g.cols(); ++j) {
          const double d1 = central(b, w, k.matrix(), i, j, h);
          const double d2 = central(b, w, k.matrix(), i, j, 0.5 * h);
          const double fd = (4.0 * d2 - d1) / 3.0;
          worst = std::max(worst, std::abs(fd - g(i, j)) / std::abs(g(i, j)));
          worst_plain = std::max(worst_plain, std::abs(d1 - g(i, j)) / std::abs(g(i, j)));
        }
      }
      ++gains;
    }
  }
  return {worst <= 1e-5, std::to_string(gains) + " gains, worst per-entry relative error " +
                             fmt("%.2e", worst) +
                             " <= 1e-5 (Richardson of central differences, h = 1e-5; plain "
                             "central difference " +
                             fmt("%.2e", worst_plain) + ")"};
}

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const LtiSystem sys = example4();
  const LqgWeights w = example4_weights();
  const BehavioralSystem b = lift_problem(sys, w);
  const BehavioralLqgSolution sol = solve_behavioral_lqg(sys, w);
  const double j_star = sol.cost;
  const double j_star_dyn = compensator_cost(sys, w, sol.classical.controller, false).cost;
  const Matrix pi = gauge_projector(b, sol.riccati.P);
  const Matrix printed = mat(1, 5, {-0.0366, -0.1030, 0.0, 5.8460, -4.7434});

  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const StabilizingInit init = stabilizing_init(sys, 0.45, 0.92, seed);
    BehavioralDescentOptions bopt;
    bopt.max_iters = 15000;
    bopt.freeze_k2 = true;
    bopt.reference_cost = j_star;
    const BehavioralDescentResult br = grad_descent_behavioral(b, w, init.gain, bopt);
    const double gerr = ((br.gain.matrix() - printed) * pi).cwiseAbs().maxCoeff();
    const double bgap = br.trace.final_cost() - j_star;

    DescentOptions dopt;
    dopt.max_iters = 15000;
    dopt.reference_cost = j_star_dyn;
    const DynamicDescentResult dr = grad_descent_dynamic(sys, w, init.controller, dopt);
    const double dgap = dr.trace.final_cost() - j_star_dyn;

    const bool converged = br.trace.status == DescentStatus::kGradientVanished &&
                           br.trace.iterations() <= 15000;
    ok = ok && converged && gerr <= 1e-3 && dgap > bgap;
    detail += "seed " + std::to_string(seed) + ": " + to_string(br.trace.status) + " at " +
              std::to_string(br.trace.iterations()) + ", |K-K*| " + fmt("%.1e", gerr) +
              " <= 1e-3, gap " + fmt("%.1e", bgap) + " < dynamic " + fmt("%.2e", dgap) + "; ";
  }
  const double elapsed = seconds_since(t0);
  ok = ok && elapsed < 600.0;
  return {ok, detail + fmt("%.0f", elapsed) + " s < 600 s"};
}

Outcome criterion7() {
  const double k1 = sparsity_partition(solve_behavioral_lqg(example1(), example1_weights()).gain)
                        .K2.cwiseAbs().rowwise().sum().maxCoeff();
  const double k4 = sparsity_partition(solve_behavioral_lqg(example4(), example4_weights()).gain)
                        .K2.cwiseAbs().rowwise().sum().maxCoeff();
  CounterRng rng(707);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4, m = 1 + trial % 3, p = 1 + trial % 2;
    const DynamicController c = random_estimator_compensator(rng, n, m, p, 0.9);
    const Matrix k2 = sparsity_partition(staticize(c, SystemDims{n, m, p})).K2;
    worst = std::max(worst, k2.cwiseAbs().rowwise().sum().maxCoeff());
  }
  const bool ok = k1 <= 1e-8 && k4 <= 1e-8 && worst <= 1e-8;
  return {ok, "|K2|inf Ex1 " + fmt("%.1e", k1) + ", Ex4 " + fmt("%.1e", k4) +
                  ", 50 random stable estimator-form compensators " + fmt("%.1e", worst) +
                  " <= 1e-8"};
}

Outcome criterion8() {
  ExpertData printed;
  printed.dims = SystemDims{1, 1, 1};
  printed.U_N = mat(1, 2, {-0.2269, -0.1231});
  printed.Y_N = mat(2, 2, {1.7878, -0.2269, 1.3371, 0.211});
  printed.t0 = 1;
  printed.k = 2;
  const Matrix kp = learn_gain(printed).gain.matrix();
  const double err = std::max(std::abs(kp(0, 0) - 0.1716), std::abs(kp(0, 2) + 0.3991));

  const LtiSystem sys = example1();
  const LqgWeights w = example1_weights();
  const LqgSolution lqg = lqg_compensator(sys, w);
  const BehavioralLqgSolution sol = solve_behavioral_lqg(sys, w);
  const int samples = sufficient_samples(1, 1, 1);
  const Trajectory demo = simulate(sys, CompensatorLaw{lqg.controller, Vector()}, samples, 31);
  const ExpertData data = assemble_expert_data(demo, sys.dims(), sys.n());
  const LearnedGain learned = learn_gain(data);
  const RolloutReport r = validate_by_rollout(sys, learned.gain, sol.gain, w, 100, 32);
  const bool ok = err <= 5e-4 && samples_used(sys.dims(), data.k) == samples &&
                  r.output_deviation <= 1e-8;
  return {ok, "printed data [K1 K3] = [" + fmt("%.4f", kp(0, 0)) + ", " + fmt("%.4f", kp(0, 2)) +
                  "], error " + fmt("%.1e", err) + " <= 5e-4; generated N = " +
                  std::to_string(samples) + " demo, 100-step output deviation " +
                  fmt("%.1e", r.output_deviation) + " <= 1e-8"};
}

// ---------------------------------------------------------------------------

Outcome criterion9() {
  std::vector<std::string> failed;
  auto check = [&](bool cond, const char* name) {
    if (!cond) failed.push_back(name);
  };
  CounterRng rng(909);

  bool noise = true, readback = true, recon = true;
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 1 + trial % 3, m = 1 + trial % 2, p = 1 + (trial / 2) % 2;
    const LtiSystem sys = random_system(rng, n, m, p, 0.9);
    const BehavioralSystem b = lift_system(sys);
    const DynamicController c = random_compensator(rng, n, m, p, 0.5, 0.1);
    const Trajectory a = simulate(sys, ZeroInput{}, 40, 50 + trial);
    const Trajectory tr = simulate(sys, CompensatorLaw{c, Vector()}, 40, 50 + trial);
    noise = noise && a.w == tr.w && a.v == tr.v && a.x.col(0) == tr.x.col(0);
    for (int t = 0; t < 40; ++t) {
      const Vector next = sys.a() * tr.x.col(t) + sys.b() * tr.u.col(t) + tr.w.col(t);
      readback = readback && (tr.x.col(t + 1) - next).norm() <= 1e-12 * (1.0 + next.norm());
      if (t >= n) {
        const Vector z = behavioral_state(tr, t, sys.dims()).z;
        recon = recon && (b.H * z - tr.x.col(t)).norm() <= 1e-9 * (1.0 + tr.x.col(t).norm());
      }
    }
  }
  check(noise, "noise reproducibility");
  check(readback, "dynamics readback");
  check(recon, "x = Hz reconstruction");

  bool dare = true;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 5, m = 1 + trial % 3;
    const Matrix a = random_matrix_with_radius(rng, n, 1.3);
    const Matrix bm = gaussian(rng, n, m);
    if (!is_controllable(a, bm)) continue;
    const Matrix q = random_spd(rng, n), r = random_spd(rng, m);
    const Matrix x = solve_dare(a, bm, q, r).X;
    const Matrix s = r + bm.transpose() * x * bm;
    const Matrix res = x - a.transpose() * x * a +
                       a.transpose() * x * bm * s.inverse() * bm.transpose() * x * a - q;
    dare = dare && res.norm() <= 1e-10 * x.norm();
  }
  check(dare, "DARE residual bound");

  int gauge_cases = 0;
  bool gauge = true;
  for (int trial = 0; trial < 10; ++trial) {
    const LtiSystem sys = random_system(rng, 2, 2, 1, 0.7);
    const LqgWeights w = random_weights(rng, 2, 2);
    const BehavioralSystem b = lift_problem(sys, w);
    Matrix k = 0.05 * gaussian(rng, 2, b.history_dim());
    k.row(1).setZero();
    const BehavioralGain base(k, sys.dims());
    if (closed_loop_radius(b, base) >= 0.95) continue;
    const GainCost gc = cost_of_gain(b, base, w);
    const Matrix pi = gauge_projector(b, gc.P);
    const Matrix null = Matrix::Identity(pi.rows(), pi.cols()) - pi;
    const BehavioralGain moved(k + 0.2 * gaussian(rng, 2, b.history_dim()) * null, sys.dims());
    if (closed_loop_radius(b, moved) >= 1.0) continue;
    ++gauge_cases;
    gauge = gauge && std::abs(cost_of_gain(b, moved, w).cost - gc.cost) <= 1e-9 * gc.cost;
  }
  check(gauge && gauge_cases >= 5, "gauge invariance");

  bool monotone = true;
  for (int trial = 0; trial < 4; ++trial) {
    const LtiSystem sys = random_system(rng, 2, 1, 1, 0.9);
    const LqgWeights w = random_weights(rng, 2, 1);
    const BehavioralSystem b = lift_problem(sys, w);
    BehavioralDescentOptions opts;
    opts.max_iters = 100;
    const BehavioralDescentResult r =
        grad_descent_behavioral(b, w, stabilizing_init(sys, 0.3, 0.6, 20 + trial).gain, opts);
    for (std::size_t i = 1; i < r.trace.records.size(); ++i) {
      monotone = monotone && r.trace.records[i].cost <= r.trace.records[i - 1].cost;
    }
    monotone = monotone && closed_loop_radius(b, r.gain) < 1.0;
  }
  check(monotone, "monotone Armijo descent");

  std::string detail = "noise reproducibility, dynamics readback, DARE residual, gauge invariance (" +
                       std::to_string(gauge_cases) + " cases), monotone descent, x = Hz";
  if (!failed.empty()) {
    detail += "; failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  report(1, "Example 1 closed form", criterion1);
  report(2, "trajectory equivalence", criterion2);
  report(3, "coupled Riccati residuals", criterion3);
  report(4, "Monte Carlo cost equivalence", criterion4);
  report(5, "gradient oracle", criterion5);
  report(6, "Example 4 optimization", criterion6);
  report(7, "sparsity", criterion7);
  report(8, "imitation", criterion8);
  report(9, "property suites", criterion9);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
