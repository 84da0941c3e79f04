#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lfire/baselines.hpp"
#include "lfire/model.hpp"
#include "lfire/penlogit.hpp"

namespace lfire {

/// Stream tags for (seed, tag, index) derived rng streams.
enum class StreamTag : std::uint64_t {
  Bank = 1,
  Node = 2,
  Particles = 3,
  ObservedNoise = 4,
  Observed = 5,
  Abc = 6,
  Forecast = 7,
  Dataset = 8,
};
Rng stream_rng(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0);

/// Summaries of n_m prior-predictive simulations, shared by every node.
struct MarginalBank {
  Eigen::MatrixXd stats;
  Eigen::MatrixXd thetas;
  int redraws = 0;
};

MarginalBank build_marginal_bank(const Model& model, const SummaryMap& map, int n_m, Rng& rng,
                                 int max_redraws = 10);

struct NodeOptions {
  int n_theta = 1000;
  bool lfire = true;
  bool synthetic = false;
  FitOptions fit;
  int max_redraws = 10;
};

struct NodeResult {
  /// false when the node lies outside the prior or its simulations kept failing.
  bool ok = false;
  int redraws = 0;
  /// Also set when a fit failed on an otherwise simulated node; that fit stays empty.
  std::string failure;
  std::optional<RatioFit> ratio;
  std::optional<SyntheticLikelihoodFit> synthetic;
};

/// Fits one parameter value against the bank; `rng` drives its simulations,
/// noise statistics and cross-validation folds.
NodeResult evaluate_node(const Model& model, const SummaryMap& map, const MarginalBank* bank,
                         const Eigen::VectorXd& theta, Rng& rng, const NodeOptions& options);

/// One node per row of `nodes`, node i on stream (seed, Node, i). Parallel
/// over nodes with `workers` threads; the result does not depend on `workers`.
std::vector<NodeResult> evaluate_nodes(const Model& model, const SummaryMap& map, const MarginalBank* bank,
                                       const Eigen::MatrixXd& nodes, std::uint64_t seed, const NodeOptions& options,
                                       int workers);
/// Single-threaded reference of evaluate_nodes.
std::vector<NodeResult> evaluate_nodes_serial(const Model& model, const SummaryMap& map, const MarginalBank* bank,
                                              const Eigen::MatrixXd& nodes, std::uint64_t seed,
                                              const NodeOptions& options);

enum class Method { Lfire, SyntheticLikelihood };

/// Log posterior per node: log prior + ratio(psi0) or synthetic log-likelihood(phi0).
Eigen::VectorXd node_log_posterior(const Model& model, const Eigen::MatrixXd& nodes,
                                   const std::vector<NodeResult>& results, Method method,
                                   const Eigen::VectorXd& psi0, const Eigen::VectorXd& phi0);

GridPosterior grid_from_nodes(const Model& model, const GridAxes& axes, const std::vector<NodeResult>& results,
                              Method method, const Eigen::VectorXd& psi0, const Eigen::VectorXd& phi0);
WeightedSample sample_from_nodes(const Model& model, const Eigen::MatrixXd& particles,
                                 const std::vector<NodeResult>& results, Method method, const Eigen::VectorXd& psi0,
                                 const Eigen::VectorXd& phi0);

/// psi(x0) with its noise columns drawn from (seed, ObservedNoise, dataset).
Eigen::VectorXd observed_summary(const SummaryMap& map, const Dataset& x0, std::uint64_t seed,
                                 std::uint64_t dataset = 0);

struct EngineOptions {
  int n_theta = 1000;
  int n_m = 1000;
  FitOptions fit;
  int workers = 1;
};

RatioFit log_ratio_at(const Model& model, const Eigen::VectorXd& theta, const MarginalBank& bank,
                      const SummaryMap& map, int n_theta, Rng& rng, const FitOptions& fit = {});

GridPosterior posterior_on_grid(const Model& model, const Dataset& x0, const GridAxes& axes, std::uint64_t seed,
                                const EngineOptions& options);
WeightedSample importance_posterior(const Model& model, const Dataset& x0, int n_particles, std::uint64_t seed,
                                    const EngineOptions& options);

/// Mean of exp(h) over the bank; near 1 for a healthy ratio fit.
double bank_ratio_mean(const RatioFit& fit, const MarginalBank& bank);

}  // namespace lfire
