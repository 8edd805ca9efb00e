#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blqg/behavioral.hpp"
#include "blqg/controller_types.hpp"
#include "blqg/linalg.hpp"
#include "blqg/lti_system.hpp"
#include "blqg/policy_opt.hpp"

namespace blqg {

using Json = nlohmann::json;

/// {"rows": r, "cols": c, "data": [[row 0], [row 1], ...]}
Json matrix_to_json(const Matrix& m);
/// Accepts the object form above, a nested row-major array, a flat array
/// (column vector) or a bare number (1 x 1). `path` prefixes error messages.
Matrix matrix_from_json(const Json& j, const std::string& path = "$");

Json gain_to_json(const BehavioralGain& gain);
/// Reads "dims" and "K"; other keys (partition, diagnostics) are ignored.
BehavioralGain gain_from_json(const Json& j, const std::string& path = "$");

Json controller_to_json(const DynamicController& ctrl);
/// Reads "E", "F", "G", "H"; other keys are ignored.
DynamicController controller_from_json(const Json& j, const std::string& path = "$");

Json behavioral_system_to_json(const BehavioralSystem& bsys);

// ---------------------------------------------------------------------------
// Experiment configuration.

struct DemoSettings {
  std::string source = "generate";  ///< generate | csv | matrices
  std::string path;                 ///< csv source
  int t0 = -1;                      ///< -1 selects n
  int k = 0;                        ///< 0 selects nm + np
  int horizon = 0;                  ///< generated demo length, 0 selects t0 + k
  std::optional<Matrix> U_N, Y_N;   ///< matrices source
  int validate_horizon = 100;
};

struct ExperimentSettings {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;  ///< pg sweep; defaults to {seed}
  int horizon = 50;
  std::string controller = "behavioral";  ///< simulate: none | classical | behavioral
  std::string mode = "behavioral";        ///< pg: behavioral | dynamic | both
  std::string init = "pole-placement";    ///< pg: pole-placement | optimal
  ArmijoParams armijo;
  int max_iters = 15000;
  double grad_tol = 1e-8;
  double eig_low = 0.45;
  double eig_high = 0.92;
  bool freeze_k2 = false;
  DemoSettings demo;
};

struct OutputSettings {
  std::string directory = ".";
  std::string prefix;
};

struct ExperimentConfig {
  LtiSystem system;
  LqgWeights weights;
  ExperimentSettings experiment;
  OutputSettings output;
};

/// Validates the document against the config schema. Unknown keys, wrong
/// types and malformed matrices raise InputFormatError naming the JSON path
/// (e.g. "$.experiment.armijo.gamma"); plant/weight validation errors pass
/// through as DimensionError or AssumptionError.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

}  // namespace blqg
