#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lfire/penlogit.hpp"
#include "lfire/simulators.hpp"
#include "lfire/summaries.hpp"

namespace lfire {

struct AxisSpec {
  double lo = 0.0;
  double hi = 1.0;
  int n = 1;
};

struct MethodConfig {
  /// Any of "lfire", "synthlik", "abc", "exact".
  std::vector<std::string> names{"lfire"};
  int n_theta = 1000;
  int n_m = 1000;
  /// Grid axes, one per parameter. Empty means importance sampling with `particles` prior draws.
  std::vector<AxisSpec> grid;
  int particles = 0;
  int n_lambda = 100;
  double lambda_ratio = 1e-4;
  int folds = 10;
  std::optional<double> fixed_lambda;
  int max_redraws = 10;
  int abc_sims = 10000;
  std::optional<double> abc_rate = 0.02;
  std::optional<double> abc_threshold;
  int gh_order = 64;

  [[nodiscard]] bool has(const std::string& name) const;
  [[nodiscard]] bool on_grid() const { return !grid.empty(); }
};

struct ExperimentConfig {
  std::string name = "run";
  std::uint64_t seed = 0;
  SimulatorSpec simulator;
  SummaryMapSpec summary;
  Eigen::VectorXd theta0;
  int replications = 1;
  /// Dataset indices to process; empty means all replications.
  std::vector<int> subset;
  MethodConfig method;
  int forecast_steps = 80;
  std::string output = "out";

  [[nodiscard]] std::vector<int> datasets() const;
};

/// Parses and validates a config. Unknown keys, missing required fields and
/// invalid values are collected and reported together in one ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);
/// Fully resolved config, suitable for the run manifest and for parse_config.
nlohmann::json to_json(const ExperimentConfig& c);

std::vector<std::string> preset_names();
nlohmann::json preset_json(const std::string& name);
ExperimentConfig load_preset(const std::string& name);

FitOptions fit_options(const MethodConfig& m);

}  // namespace lfire
