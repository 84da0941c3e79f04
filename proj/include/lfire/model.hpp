#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lfire/error.hpp"
#include "lfire/simulators.hpp"
#include "lfire/summaries.hpp"

namespace lfire {

/// Prior, simulator and summary map: everything inference needs about a model.
struct Model {
  SimulatorSpec simulator;
  SummaryMapSpec summary;
  PriorBox prior;
  std::vector<std::string> parameter_names;
};

/// Validates the pairing of simulator and summary map and resolves defaults.
Model make_model(const SimulatorSpec& simulator, const SummaryMapSpec& summary);

/// Summary map instance for one observed dataset (the Ricker map needs it as reference).
SummaryMap summary_map_for(const Model& model, const Dataset& observed);

/// Simulates at theta, redrawing failed (non-finite or degenerate) datasets.
/// `summarize` runs inside the retry so degenerate summaries also trigger a
/// redraw. Throws the last NumericalError after `max_redraws` redraws.
template <class Summarize>
auto simulate_with_redraw(const Model& model, const Eigen::VectorXd& theta, Rng& rng, int max_redraws,
                          int& redraws, Summarize&& summarize);

using GridAxes = std::vector<Eigen::VectorXd>;

/// n cell centres of [lo, hi].
Eigen::VectorXd cell_centered_axis(double lo, double hi, int n);
/// Product-grid nodes, one per row; the first axis varies slowest.
Eigen::MatrixXd grid_nodes(const GridAxes& axes);
/// Product of the (uniform) axis spacings; single-point axes count as 1.
double cell_measure(const GridAxes& axes);

struct GridPosterior {
  GridAxes axes;
  /// Unnormalized log posterior per node; -inf for excluded or failed nodes.
  Eigen::VectorXd log_values;
  /// Normalized density per node.
  Eigen::VectorXd density;
  /// false for nodes outside the prior support.
  std::vector<char> in_support;
  double cell = 1.0;

  [[nodiscard]] Eigen::Index size() const { return density.size(); }
  [[nodiscard]] Eigen::MatrixXd nodes() const { return grid_nodes(axes); }
};

/// Normalizes log values by a log-sum-exp Riemann sum. Throws
/// DegeneratePosterior when every node is -inf.
GridPosterior normalize_grid(const GridAxes& axes, Eigen::VectorXd log_values, std::vector<char> in_support);

struct WeightedSample {
  Eigen::MatrixXd particles;
  Eigen::VectorXd weights;
  double ess = 0.0;
};

/// Self-normalized weights from log weights. Throws DegeneratePosterior when
/// every weight is zero.
WeightedSample normalize_weights(Eigen::MatrixXd particles, const Eigen::VectorXd& log_weights);

struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};
Moments posterior_moments(const WeightedSample& ws);
Moments posterior_moments(const GridPosterior& gp);

// ---------------------------------------------------------------------------

template <class Summarize>
auto simulate_with_redraw(const Model& model, const Eigen::VectorXd& theta, Rng& rng, int max_redraws,
                          int& redraws, Summarize&& summarize) {
  for (int attempt = 0;; ++attempt) {
    try {
      const Dataset x = simulate(model.simulator, theta, rng);
      if (!x.allFinite()) throw Divergence("simulation produced non-finite values", -1);
      return summarize(x);
    } catch (const NumericalError&) {
      if (attempt >= max_redraws) throw;
      ++redraws;
    }
  }
}

}  // namespace lfire
