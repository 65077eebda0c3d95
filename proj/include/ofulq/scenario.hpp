#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ofulq/confidence.hpp"
#include "ofulq/lqmodel.hpp"
#include "ofulq/noise.hpp"
#include "ofulq/ofu.hpp"

namespace ofulq {

/// Experiment configuration. Matrices are stored row-major in JSON as flat
/// arrays; `p` and `r` fix their shapes.
struct Scenario {
  std::string name;

  int p = 1;
  int r = 1;
  MatrixXd A, B, Q, R, C;

  std::string noise_kind = "gaussian";  // gaussian | weibull_symmetric | uniform_bounded | zero
  double noise_shape = 0.0;             // Weibull shape; ignored otherwise
  std::optional<TailTriple> tail_override;

  MatrixXd set_A, set_B;  // center of the operator-norm ball Theta_0
  double set_radius = 0.0;

  double delta = 0.05;
  double gamma = 2.0;
  double scale = 1.0;
  std::optional<double> radius_scale;  // defaults to scale
  int samples = 50;
  double tolerance = 0.0;
  bool inject_true_theta = false;

  long T = 1000;
  std::vector<long> T_grid;
  int seeds = 1;
  std::uint64_t seed = 0;
  VectorXd x0;

  // Verification settings. Without epsilon, lambda_min(C) / 2 is used;
  // without verify_L, the optimal gain of the true system.
  long trials = 1000;
  long replications = 1000;
  long verify_n = 100;
  std::optional<double> epsilon;
  long limit_n = 100000;
  std::optional<MatrixXd> verify_L;

  std::optional<MatrixXd> fixed_gain;
  long ce_warmup = 0;
  long ce_update_period = 1;

  std::string output_directory = ".";
  std::vector<std::string> formats{"csv", "json"};
};

/// Parses and validates. Throws ArgumentError on missing or unknown fields,
/// bad shapes and out-of-range values.
Scenario parse_scenario(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);

std::vector<std::string> preset_names();
/// Throws ArgumentError for unknown names.
Scenario preset(const std::string& name);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const Scenario& s);

DynamicsParameter scenario_theta(const Scenario& s);
CostPair scenario_cost(const Scenario& s);
NoiseModel scenario_noise(const Scenario& s);
ParameterRegion scenario_region(const Scenario& s);
AlgorithmConfig scenario_algorithm(const Scenario& s);

}  // namespace ofulq
