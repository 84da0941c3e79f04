#include "lfire/model.hpp"

#include <cmath>
#include <limits>

#include "lfire/error.hpp"

namespace lfire {

namespace {

BaseMap natural_base(const SimulatorSpec& s) {
  switch (s.index()) {
    case 0: return BaseMap::GaussianPoly;
    case 1: return BaseMap::Arch;
    case 2: return BaseMap::RickerWood;
    default: return BaseMap::LorenzHakkarainen;
  }
}

}  // namespace

Model make_model(const SimulatorSpec& simulator, const SummaryMapSpec& summary) {
  validate(simulator);
  if (summary.base != natural_base(simulator)) {
    throw ConfigError("summary map '" + to_string(summary.base) + "' does not fit model '" + model_name(simulator) +
                      "'");
  }
  if (summary.noise_dims < 0) throw ConfigError("noise_dims must be >= 0");
  if (summary.base == BaseMap::GaussianPoly && summary.degree < 1) throw ConfigError("degree must be >= 1");
  if (summary.base == BaseMap::Arch && summary.expansion != Expansion::None) {
    throw ConfigError("the arch map already contains its pairwise products");
  }
  Model m;
  m.simulator = resolved(simulator);
  m.summary = summary;
  m.prior = prior_of(m.simulator);
  m.parameter_names = parameter_names(m.simulator);
  return m;
}

SummaryMap summary_map_for(const Model& model, const Dataset& observed) {
  if (model.summary.base == BaseMap::RickerWood) return SummaryMap(model.summary, observed);
  return SummaryMap(model.summary);
}

Eigen::VectorXd cell_centered_axis(double lo, double hi, int n) {
  if (n < 1) throw ConfigError("grid axis needs at least one point");
  if (!(hi > lo)) throw ConfigError("grid axis needs hi > lo");
  Eigen::VectorXd a(n);
  const double h = (hi - lo) / n;
  for (int i = 0; i < n; ++i) a[i] = lo + (i + 0.5) * h;
  return a;
}

Eigen::MatrixXd grid_nodes(const GridAxes& axes) {
  Eigen::Index total = 1;
  for (const auto& a : axes) total *= a.size();
  const auto d = static_cast<Eigen::Index>(axes.size());
  Eigen::MatrixXd nodes(total, d);
  for (Eigen::Index g = 0; g < total; ++g) {
    Eigen::Index rest = g;
    for (Eigen::Index k = d - 1; k >= 0; --k) {
      const auto& a = axes[static_cast<std::size_t>(k)];
      nodes(g, k) = a[rest % a.size()];
      rest /= a.size();
    }
  }
  return nodes;
}

double cell_measure(const GridAxes& axes) {
  double cell = 1.0;
  for (const auto& a : axes) {
    if (a.size() == 0) throw ConfigError("empty grid axis");
    if (a.size() == 1) continue;
    const double h = (a[a.size() - 1] - a[0]) / static_cast<double>(a.size() - 1);
    for (Eigen::Index i = 1; i < a.size(); ++i) {
      if (std::fabs((a[i] - a[i - 1]) - h) > 1e-9 * std::max(1.0, std::fabs(h))) {
        throw ConfigError("grid axes must be uniformly spaced and increasing");
      }
    }
    if (!(h > 0.0)) throw ConfigError("grid axes must be increasing");
    cell *= h;
  }
  return cell;
}

GridPosterior normalize_grid(const GridAxes& axes, Eigen::VectorXd log_values, std::vector<char> in_support) {
  GridPosterior gp;
  gp.axes = axes;
  gp.cell = cell_measure(axes);
  if (static_cast<std::size_t>(log_values.size()) != in_support.size()) throw ConfigError("support mask size mismatch");
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index g = 0; g < log_values.size(); ++g) {
    if (std::isnan(log_values[g])) throw NumericalError("NaN log posterior value at node " + std::to_string(g));
    if (!in_support[static_cast<std::size_t>(g)]) log_values[g] = -std::numeric_limits<double>::infinity();
    top = std::max(top, log_values[g]);
  }
  if (!std::isfinite(top)) throw DegeneratePosterior("every grid node has zero posterior");
  double acc = 0.0;
  for (Eigen::Index g = 0; g < log_values.size(); ++g) acc += std::exp(log_values[g] - top);
  const double log_norm = top + std::log(acc) + std::log(gp.cell);
  // std::exp, not the vectorized Eigen exp: exp(-inf) must be exactly 0.
  gp.density.resize(log_values.size());
  for (Eigen::Index g = 0; g < log_values.size(); ++g) gp.density[g] = std::exp(log_values[g] - log_norm);
  gp.log_values = std::move(log_values);
  gp.in_support = std::move(in_support);
  return gp;
}

WeightedSample normalize_weights(Eigen::MatrixXd particles, const Eigen::VectorXd& log_weights) {
  if (particles.rows() != log_weights.size()) throw ConfigError("particle/weight count mismatch");
  const double top = log_weights.size() ? log_weights.maxCoeff() : -std::numeric_limits<double>::infinity();
  if (!std::isfinite(top)) throw DegeneratePosterior("every importance weight is zero");
  WeightedSample ws;
  ws.weights.resize(log_weights.size());
  for (Eigen::Index i = 0; i < log_weights.size(); ++i) ws.weights[i] = std::exp(log_weights[i] - top);
  ws.weights /= ws.weights.sum();
  ws.ess = 1.0 / ws.weights.squaredNorm();
  ws.particles = std::move(particles);
  return ws;
}

Moments posterior_moments(const WeightedSample& ws) {
  Moments m;
  m.mean = ws.particles.transpose() * ws.weights;
  m.std.resize(ws.particles.cols());
  for (Eigen::Index k = 0; k < ws.particles.cols(); ++k) {
    const double var = ((ws.particles.col(k).array() - m.mean[k]).square() * ws.weights.array()).sum();
    m.std[k] = std::sqrt(std::max(var, 0.0));
  }
  return m;
}

Moments posterior_moments(const GridPosterior& gp) {
  const Eigen::MatrixXd nodes = gp.nodes();
  const Eigen::VectorXd mass = gp.density * gp.cell;
  Moments m;
  m.mean = nodes.transpose() * mass;
  m.std.resize(nodes.cols());
  for (Eigen::Index k = 0; k < nodes.cols(); ++k) {
    const double var = ((nodes.col(k).array() - m.mean[k]).square() * mass.array()).sum();
    m.std[k] = std::sqrt(std::max(var, 0.0));
  }
  return m;
}

}  // namespace lfire
