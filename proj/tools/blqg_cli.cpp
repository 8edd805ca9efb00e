#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "blqg/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Behavioral LQG: closed-form solve, simulation, policy gradient, imitation"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  const char* names[] = {"solve", "simulate", "pg", "imitate"};
  const char* help[] = {
      "optimal behavioral gain, coupled Riccati residuals, classical compensator",
      "state-space and behavioral rollouts under a shared seed",
      "gradient descent over the behavioral gain and/or the compensator matrices",
      "learn the gain from expert demonstrations",
  };
  for (int i = 0; i < 4; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
    sub->add_option("--seed", seed, "seed override");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : blqg::kExitInputFormat;
  }

  CLI::App* sub = app.get_subcommands().front();
  blqg::CommandOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (sub->count("--seed")) opts.seed = seed;
  return blqg::run_command(sub->get_name(), config, opts);
}
