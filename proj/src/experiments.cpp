#include "blqg/experiments.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "blqg/behavioral.hpp"
#include "blqg/classical_lqg.hpp"
#include "blqg/errors.hpp"
#include "blqg/imitation.hpp"
#include "blqg/policy_opt.hpp"

namespace blqg {

namespace fs = std::filesystem;

namespace {

class Output {
 public:
  Output(const ExperimentConfig& cfg, const CommandOptions& opts)
      : dir_(opts.out_dir.value_or(cfg.output.directory)), prefix_(cfg.output.prefix) {
    fs::create_directories(dir_);
  }

  fs::path path(const std::string& name) const { return dir_ / (prefix_ + name); }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw InputFormatError("cannot write " + path(name).string());
    f << content;
  }

  void write_json(const std::string& name, const Json& j) const { write(name, j.dump(2) + "\n"); }

 private:
  fs::path dir_;
  std::string prefix_;
};

std::ostream& out_stream(const CommandOptions& o) { return o.out ? *o.out : std::cout; }
std::ostream& err_stream(const CommandOptions& o) { return o.err ? *o.err : std::cerr; }

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(6) << x;
  return s.str();
}

std::string fmt(const Matrix& m) {
  std::ostringstream s;
  s << std::setprecision(6) << "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s << "; ";
    for (Eigen::Index k = 0; k < m.cols(); ++k) s << (k ? ", " : "") << m(i, k);
  }
  s << "]";
  return s.str();
}

std::uint64_t base_seed(const ExperimentConfig& cfg, const CommandOptions& opts) {
  return opts.seed.value_or(cfg.experiment.seed);
}

void emit_summary(const Output& out, const CommandOptions& opts, const std::string& text) {
  out.write("summary.txt", text);
  out_stream(opts) << text;
}

}  // namespace

int cmd_solve(const ExperimentConfig& cfg, const CommandOptions& opts) {
  const Output out(cfg, opts);
  const BehavioralLqgSolution sol = solve_behavioral_lqg(cfg.system, cfg.weights);
  const RiccatiPair& ric = sol.riccati;
  const LqgSolution& cl = sol.classical;

  Json gain = gain_to_json(sol.gain);
  gain["cost"] = sol.cost;
  gain["gradient_norm"] = sol.gradient_norm;
  gain["spectral_radius"] = sol.spectral_radius;
  out.write_json("gain.json", gain);

  out.write_json("riccati.json",
                 Json{{"M", matrix_to_json(ric.M)},
                      {"P", matrix_to_json(ric.P)},
                      {"S_M", matrix_to_json(ric.S_M)},
                      {"S_P", matrix_to_json(ric.S_P)},
                      {"residual_M", ric.residual_M},
                      {"residual_P", ric.residual_P},
                      {"relative_residual_M", ric.relative_residual_M},
                      {"relative_residual_P", ric.relative_residual_P}});

  Json classical = controller_to_json(cl.controller);
  classical["K_lqr"] = matrix_to_json(cl.k_lqr);
  classical["K_kf"] = matrix_to_json(cl.k_kf);
  classical["X_control"] = matrix_to_json(cl.control.X);
  classical["X_filter"] = matrix_to_json(cl.filter.X);
  classical["dare_residual_control"] = cl.control.residual;
  classical["dare_residual_filter"] = cl.filter.residual;
  classical["alt"] = Json{{"Ebar", matrix_to_json(cl.alt.Ebar)},
                          {"Fbar", matrix_to_json(cl.alt.Fbar)},
                          {"Gbar", matrix_to_json(cl.alt.Gbar)}};
  classical["lifted"] = behavioral_system_to_json(sol.bsys);
  out.write_json("classical.json", classical);

  const SparsityPartition part = sparsity_partition(sol.gain);
  std::ostringstream s;
  s << "K_lqr      " << fmt(cl.k_lqr) << "\n"
    << "K_kf       " << fmt(cl.k_kf) << "\n"
    << "E          " << fmt(cl.controller.E) << "\n"
    << "F          " << fmt(cl.controller.F) << "\n"
    << "G          " << fmt(cl.controller.G) << "\n"
    << "H          " << fmt(cl.controller.H) << "\n"
    << "A_u        " << fmt(sol.bsys.Au) << "\n"
    << "A_y        " << fmt(sol.bsys.Ay) << "\n"
    << "A_v        " << fmt(sol.bsys.Av) << "\n"
    << "K          " << fmt(sol.gain.matrix()) << "\n"
    << "K2 zero    " << (part.is_sparse ? "yes" : "no") << "\n"
    << "cost       " << fmt(sol.cost) << "\n"
    << "rho        " << fmt(sol.spectral_radius) << "\n"
    << "|grad|     " << fmt(sol.gradient_norm) << "\n"
    << "res M      " << fmt(ric.relative_residual_M) << "\n"
    << "res P      " << fmt(ric.relative_residual_P) << "\n";
  emit_summary(out, opts, s.str());
  return kExitOk;
}

int cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opts) {
  const ExperimentSettings& e = cfg.experiment;
  const LtiSystem& sys = cfg.system;
  const int n = sys.n();
  if (e.horizon < n) {
    throw InputFormatError("$.experiment.horizon: must be at least n = " + std::to_string(n));
  }
  const Output out(cfg, opts);
  const std::uint64_t seed = base_seed(cfg, opts);
  const BehavioralSystem bsys = lift_problem(sys, cfg.weights);

  ControlLaw law = ZeroInput{};
  std::optional<BehavioralGain> gain;
  if (e.controller != "none") {
    const BehavioralLqgSolution sol = solve_behavioral_lqg(sys, cfg.weights);
    gain = sol.gain;
    if (e.controller == "classical") {
      law = CompensatorLaw{sol.classical.controller, Vector()};
    } else {
      law = BehavioralLaw{sol.gain};
    }
  }
  const Trajectory traj = simulate(sys, law, e.horizon, seed);
  const LiftedTrajectory lifted = simulate_lifted(bsys, traj, gain);

  std::ostringstream ss;
  write_trajectory_csv(ss, traj);
  out.write("statespace.csv", ss.str());

  const SystemDims& d = sys.dims();
  const Matrix y_lift = lifted.outputs();
  std::ostringstream bs;
  bs << std::setprecision(17) << "t";
  for (int i = 1; i <= bsys.state_dim(); ++i) bs << ",z" << i;
  for (int i = 1; i <= d.m; ++i) bs << ",u" << i;
  for (int i = 1; i <= d.p; ++i) bs << ",y" << i;
  bs << "\n";
  for (Eigen::Index j = 0; j < lifted.z.cols(); ++j) {
    bs << lifted.t0 + j;
    for (Eigen::Index i = 0; i < lifted.z.rows(); ++i) bs << ',' << lifted.z(i, j);
    for (int i = 0; i < d.m; ++i) {
      bs << ',';
      if (j < lifted.u.cols()) bs << lifted.u(i, j);
    }
    for (int i = 0; i < d.p; ++i) bs << ',' << y_lift(i, j);
    bs << "\n";
  }
  out.write("behavioral.csv", bs.str());

  std::ostringstream ds;
  ds << std::setprecision(17) << "t";
  for (int i = 1; i <= d.p; ++i) ds << ",dy" << i;
  ds << ",max_abs\n";
  double worst = 0.0;
  for (Eigen::Index j = 0; j < y_lift.cols(); ++j) {
    const Vector diff = traj.y.col(lifted.t0 + j) - y_lift.col(j);
    const double a = diff.cwiseAbs().maxCoeff();
    worst = std::max(worst, a);
    ds << lifted.t0 + j;
    for (int i = 0; i < d.p; ++i) ds << ',' << diff(i);
    ds << ',' << a << "\n";
  }
  out.write("deviation.csv", ds.str());

  std::ostringstream s;
  s << "controller     " << e.controller << "\n"
    << "horizon        " << e.horizon << "\n"
    << "seed           " << seed << "\n"
    << "compared steps " << y_lift.cols() << " (t >= " << n << ")\n"
    << "max deviation  " << fmt(worst) << "\n";
  emit_summary(out, opts, s.str());
  return kExitOk;
}

int cmd_pg(const ExperimentConfig& cfg, const CommandOptions& opts) {
  const ExperimentSettings& e = cfg.experiment;
  const LtiSystem& sys = cfg.system;
  const Output out(cfg, opts);
  const BehavioralLqgSolution sol = solve_behavioral_lqg(sys, cfg.weights);
  const double dyn_reference =
      compensator_cost(sys, cfg.weights, sol.classical.controller, false).cost;
  const Matrix projector = gauge_projector(sol.bsys, sol.riccati.P);

  std::vector<std::uint64_t> seeds = e.seeds.empty() ? std::vector{e.seed} : e.seeds;
  if (opts.seed) seeds = {*opts.seed};
  const bool run_beh = e.mode != "dynamic";
  const bool run_dyn = e.mode != "behavioral";

  Json summary{{"reference_cost", sol.cost},
               {"reference_cost_dynamic", dyn_reference},
               {"optimal_gain", matrix_to_json(sol.gain.matrix())},
               {"runs", Json::array()}};
  bool failed = false;
  std::ostringstream s;
  s << "reference cost " << fmt(sol.cost) << "\n";

  for (const std::uint64_t seed : seeds) {
    BehavioralGain k0 = sol.gain;
    DynamicController c0 = sol.classical.controller;
    if (e.init == "pole-placement") {
      const StabilizingInit init = stabilizing_init(sys, e.eig_low, e.eig_high, seed);
      k0 = init.gain;
      c0 = init.controller;
    }
    if (run_beh) {
      BehavioralDescentOptions o;
      o.armijo = e.armijo;
      o.max_iters = e.max_iters;
      o.grad_tol = e.grad_tol;
      o.reference_cost = sol.cost;
      o.freeze_k2 = e.freeze_k2;
      const BehavioralDescentResult r = grad_descent_behavioral(sol.bsys, cfg.weights, k0, o);
      const std::string name = "pg_behavioral_seed" + std::to_string(seed) + ".csv";
      std::ostringstream cs;
      write_trace_csv(cs, r.trace);
      out.write(name, cs.str());
      const double dist = ((r.gain.matrix() - sol.gain.matrix()) * projector).cwiseAbs().maxCoeff();
      summary["runs"].push_back(Json{{"mode", "behavioral"},
                                     {"seed", seed},
                                     {"trace", name},
                                     {"status", to_string(r.trace.status)},
                                     {"iterations", r.trace.iterations()},
                                     {"initial_gain", matrix_to_json(k0.matrix())},
                                     {"final_gain", matrix_to_json(r.gain.matrix())},
                                     {"final_cost", r.trace.final_cost()},
                                     {"final_gap", r.trace.final_cost() - sol.cost},
                                     {"final_grad_norm", r.trace.records.back().grad_norm},
                                     {"projected_gain_error", dist}});
      failed = failed || r.trace.status == DescentStatus::kLineSearchFailed;
      s << "behavioral seed " << seed << ": " << to_string(r.trace.status) << " after "
        << r.trace.iterations() << " iterations, gap " << fmt(r.trace.final_cost() - sol.cost)
        << ", K " << fmt(r.gain.matrix()) << "\n";
    }
    if (run_dyn) {
      DescentOptions o;
      o.armijo = e.armijo;
      o.max_iters = e.max_iters;
      o.grad_tol = e.grad_tol;
      o.reference_cost = dyn_reference;
      const DynamicDescentResult r = grad_descent_dynamic(sys, cfg.weights, c0, o);
      const std::string name = "pg_dynamic_seed" + std::to_string(seed) + ".csv";
      std::ostringstream cs;
      write_trace_csv(cs, r.trace);
      out.write(name, cs.str());
      summary["runs"].push_back(Json{{"mode", "dynamic"},
                                     {"seed", seed},
                                     {"trace", name},
                                     {"status", to_string(r.trace.status)},
                                     {"iterations", r.trace.iterations()},
                                     {"initial_controller", controller_to_json(c0)},
                                     {"final_controller", controller_to_json(r.controller)},
                                     {"final_cost", r.trace.final_cost()},
                                     {"final_gap", r.trace.final_cost() - dyn_reference},
                                     {"final_grad_norm", r.trace.records.back().grad_norm},
                                     {"gradient_self_check", r.self_check_error}});
      failed = failed || r.trace.status == DescentStatus::kLineSearchFailed;
      s << "dynamic    seed " << seed << ": " << to_string(r.trace.status) << " after "
        << r.trace.iterations() << " iterations, gap "
        << fmt(r.trace.final_cost() - dyn_reference) << "\n";
    }
  }
  out.write_json("summary.json", summary);
  out_stream(opts) << s.str();
  if (failed) {
    err_stream(opts) << "error: line search failed in at least one run (traces written)\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_imitate(const ExperimentConfig& cfg, const CommandOptions& opts) {
  const ExperimentSettings& e = cfg.experiment;
  const DemoSettings& demo = e.demo;
  const LtiSystem& sys = cfg.system;
  const SystemDims& d = sys.dims();
  const std::uint64_t seed = base_seed(cfg, opts);
  const int k = demo.k > 0 ? demo.k : d.n * d.m + d.n * d.p;

  ExpertData data;
  if (demo.source == "matrices") {
    data.U_N = *demo.U_N;
    data.Y_N = *demo.Y_N;
    data.k = static_cast<int>(data.U_N.cols());
    data.t0 = demo.t0 >= 0 ? demo.t0 : d.n;
    data.dims = d;
    try {
      data.check();
    } catch (const DimensionError& err) {
      throw InputFormatError(std::string("$.experiment.demo: ") + err.what());
    }
  } else if (demo.source == "csv") {
    std::ifstream in(demo.path);
    if (!in) throw InputFormatError("cannot open expert log '" + demo.path + "'");
    const ExpertLog log = read_expert_csv(in, d.m, d.p);
    const int t0 = demo.t0 >= 0 ? demo.t0 - log.first_t : d.n;
    try {
      data = assemble_expert_data(log.inputs, log.outputs, d, t0, k);
    } catch (const DimensionError& err) {
      throw InputFormatError(demo.path + ": " + err.what());
    }
    data.t0 += log.first_t;
  } else {
    const int t0 = demo.t0 >= 0 ? demo.t0 : d.n;
    const int horizon = demo.horizon > 0 ? demo.horizon : t0 + k;
    const LqgSolution expert = lqg_compensator(sys, cfg.weights);
    const Trajectory traj = simulate(sys, CompensatorLaw{expert.controller, Vector()}, horizon, seed);
    data = assemble_expert_data(traj, d, t0, k);
  }

  const Output out(cfg, opts);
  const LearnedGain learned = learn_gain(data);
  if (learned.warning) err_stream(opts) << "warning: " << *learned.warning << "\n";

  Json lj = gain_to_json(learned.gain);
  lj["data_rank"] = learned.data_rank;
  lj["input_rank"] = learned.input_rank;
  lj["fit_residual"] = learned.residual;
  if (learned.warning) lj["warning"] = *learned.warning;
  out.write_json("learned_gain.json", lj);

  const int required = sufficient_samples(d.n, d.m, d.p);
  const int used = samples_used(d, data.k);
  out.write_json("sufficiency.json", Json{{"required", required},
                                          {"used", used},
                                          {"columns", data.k},
                                          {"sufficient", used >= required},
                                          {"subspace_id_required", subspace_id_samples(d.n, d.m, d.p)}});

  const BehavioralLqgSolution sol = solve_behavioral_lqg(sys, cfg.weights);
  const RolloutReport rep =
      validate_by_rollout(sys, learned.gain, sol.gain, cfg.weights, demo.validate_horizon, seed);
  out.write_json("validation.json", Json{{"horizon", rep.horizon},
                                         {"seed", seed},
                                         {"reference_gain", matrix_to_json(sol.gain.matrix())},
                                         {"output_deviation", rep.output_deviation},
                                         {"input_deviation", rep.input_deviation},
                                         {"learned_cost", rep.learned_cost},
                                         {"reference_cost", rep.reference_cost},
                                         {"relative_cost_gap", rep.relative_cost_gap},
                                         {"projector_distance", rep.projector_distance}});

  std::ostringstream s;
  s << "learned K        " << fmt(learned.gain.matrix()) << "\n"
    << "reference K      " << fmt(sol.gain.matrix()) << "\n"
    << "samples          " << used << " used, " << required << " sufficient, "
    << subspace_id_samples(d.n, d.m, d.p) << " for subspace identification\n"
    << "rank(Y_N)        " << learned.data_rank << "\n"
    << "output deviation " << fmt(rep.output_deviation) << " over " << rep.horizon << " steps\n"
    << "cost gap         " << fmt(rep.relative_cost_gap) << " relative\n";
  emit_summary(out, opts, s.str());
  return kExitOk;
}

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const AssumptionError& e) {
    err << "assumption failed: " << e.what() << "\n";
    return kExitAssumption;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const InputFormatError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInputFormat;
  } catch (const DimensionError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInputFormat;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInputFormat;
  }
}

int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& opts) {
  std::ostream& err = err_stream(opts);
  return run_guarded(
      [&]() -> int {
        const ExperimentConfig cfg = load_config(config_path);
        if (command == "solve") return cmd_solve(cfg, opts);
        if (command == "simulate") return cmd_simulate(cfg, opts);
        if (command == "pg") return cmd_pg(cfg, opts);
        if (command == "imitate") return cmd_imitate(cfg, opts);
        throw InputFormatError("unknown command '" + command + "'");
      },
      err);
}

}  // namespace blqg
