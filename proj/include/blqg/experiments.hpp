#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "blqg/serialization.hpp"

namespace blqg {

enum ExitCode : int {
  kExitOk = 0,
  kExitAssumption = 2,
  kExitNumerical = 3,
  kExitInputFormat = 4,
};

struct CommandOptions {
  std::optional<std::string> out_dir;  ///< overrides output.directory
  std::optional<std::uint64_t> seed;   ///< overrides experiment.seed(s)
  std::ostream* out = nullptr;         ///< summary text; std::cout when null
  std::ostream* err = nullptr;         ///< diagnostics; std::cerr when null
};

/// gain.json, riccati.json, classical.json, summary.txt
int cmd_solve(const ExperimentConfig& cfg, const CommandOptions& opts = {});
/// statespace.csv, behavioral.csv, deviation.csv, summary.txt
int cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opts = {});
/// pg_<mode>_seed<s>.csv per run, summary.json
int cmd_pg(const ExperimentConfig& cfg, const CommandOptions& opts = {});
/// learned_gain.json, sufficiency.json, validation.json, summary.txt
int cmd_imitate(const ExperimentConfig& cfg, const CommandOptions& opts = {});

/// Maps library exceptions to exit codes: AssumptionError 2, NumericalError
/// 3, InputFormatError / DimensionError 4. The message goes to `err`.
int run_guarded(const std::function<int()>& body, std::ostream& err);

/// Loads the config at `config_path` and runs one of solve, simulate, pg,
/// imitate under run_guarded().
int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& opts = {});

}  // namespace blqg
