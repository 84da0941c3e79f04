#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lfire/config.hpp"
#include "lfire/model.hpp"

namespace lfire {

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out;
  int workers = 1;
};

std::string version_string();

/// Artifact locations relative to the output directory.
std::filesystem::path dataset_path(int dataset);
std::filesystem::path posterior_path(const std::string& method, int dataset);

/// Observed dataset `dataset` at theta0, on stream (seed, Observed, dataset).
Dataset simulate_observed(const ExperimentConfig& config, int dataset);

/// Grid CSV: parameter columns, log_value, density, in_support; rows in grid_nodes order.
void write_grid_csv(const std::filesystem::path& path, const GridPosterior& gp,
                    const std::vector<std::string>& names);
GridPosterior read_grid_csv(const std::filesystem::path& path, std::size_t dim);
/// Sample CSV: parameter columns, weight.
void write_sample_csv(const std::filesystem::path& path, const WeightedSample& ws,
                      const std::vector<std::string>& names);
WeightedSample read_sample_csv(const std::filesystem::path& path, std::size_t dim);

/// Posterior artifact of either kind; `grid` is set for grid files.
struct Artifact {
  bool grid = false;
  GridPosterior posterior;
  WeightedSample sample;
  [[nodiscard]] Moments moments() const;
};
Artifact read_artifact(const std::filesystem::path& path, std::size_t dim);

/// Each command writes its artifacts plus <command>.manifest.json and
/// <command>.timings.json, and returns the artifact paths relative to `out`.
std::vector<std::string> cmd_simulate(const RunContext& ctx);
std::vector<std::string> cmd_infer(const RunContext& ctx);
/// Compares method `a` against method `b` (Delta = a - b).
std::vector<std::string> cmd_compare(const RunContext& ctx, const std::string& a = "lfire",
                                     const std::string& b = "synthlik");
std::vector<std::string> cmd_forecast(const RunContext& ctx);

/// zeta(t) for the `steps` continuation steps from the last observed state;
/// the three runs share the noise stream (seed, Forecast, dataset).
Eigen::VectorXd forecast_zeta(const LorenzModelSpec& spec, const Dataset& x0, const Eigen::VectorXd& theta0,
                              const Eigen::VectorXd& lfire_mean, const Eigen::VectorXd& sl_mean, int steps,
                              std::uint64_t seed, int dataset);

}  // namespace lfire
