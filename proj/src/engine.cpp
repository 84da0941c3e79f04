#include "lfire/engine.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "lfire/error.hpp"

namespace lfire {

Rng stream_rng(std::uint64_t seed, StreamTag tag, std::uint64_t index) {
  return Rng(seed, derive_stream(static_cast<std::uint64_t>(tag), index));
}

MarginalBank build_marginal_bank(const Model& model, const SummaryMap& map, int n_m, Rng& rng, int max_redraws) {
  if (n_m < 1) throw ConfigError("n_m must be >= 1");
  MarginalBank bank;
  bank.thetas = sample_prior(model.prior, n_m, rng);
  bank.stats.resize(n_m, map.dimension());
  for (int i = 0; i < n_m; ++i) {
    bank.stats.row(i) = simulate_with_redraw(model, bank.thetas.row(i).transpose(), rng, max_redraws, bank.redraws,
                                             [&](const Dataset& x) { return map(x, &rng); })
                            .transpose();
  }
  return bank;
}

NodeResult evaluate_node(const Model& model, const SummaryMap& map, const MarginalBank* bank,
                         const Eigen::VectorXd& theta, Rng& rng, const NodeOptions& options) {
  NodeResult r;
  if (!model.prior.contains(theta)) {
    r.failure = "outside prior";
    return r;
  }
  if (options.n_theta < 2) throw ConfigError("n_theta must be >= 2");
  if (options.lfire && bank == nullptr) throw ConfigError("lfire evaluation needs a marginal bank");
  const Eigen::Index b = map.dimension();
  const Eigen::Index q = map.raw_dimension();
  Eigen::MatrixXd psi(options.lfire ? options.n_theta : 0, b);
  Eigen::MatrixXd phi(options.synthetic ? options.n_theta : 0, q);
  try {
    for (int i = 0; i < options.n_theta; ++i) {
      simulate_with_redraw(model, theta, rng, options.max_redraws, r.redraws, [&](const Dataset& x) {
        // Summaries first, so a degenerate dataset is redrawn before anything is stored.
        Eigen::VectorXd p = options.synthetic ? map.raw_statistics(x) : Eigen::VectorXd();
        if (options.lfire) psi.row(i) = map(x, &rng).transpose();
        if (options.synthetic) phi.row(i) = p.transpose();
        return 0;
      });
    }
  } catch (const NumericalError& e) {
    r.failure = e.what();
    return r;
  }
  if (options.lfire) {
    FitOptions fo = options.fit;
    if (!fo.constant_column) fo.constant_column = map.constant_column();
    try {
      r.ratio = fit_ratio(Design(std::move(psi), bank->stats), rng, fo);
    } catch (const NumericalError& e) {
      r.failure = std::string("ratio fit: ") + e.what();
    }
  }
  if (options.synthetic) {
    try {
      r.synthetic = fit_synthetic_likelihood(phi);
    } catch (const NumericalError& e) {
      if (!r.failure.empty()) r.failure += "; ";
      r.failure += std::string("synthetic likelihood: ") + e.what();
    }
  }
  r.ok = true;
  return r;
}

namespace {

NodeResult evaluate_indexed(const Model& model, const SummaryMap& map, const MarginalBank* bank,
                            const Eigen::MatrixXd& nodes, std::uint64_t seed, const NodeOptions& options,
                            Eigen::Index i) {
  Rng rng = stream_rng(seed, StreamTag::Node, static_cast<std::uint64_t>(i));
  return evaluate_node(model, map, bank, nodes.row(i).transpose(), rng, options);
}

}  // namespace

std::vector<NodeResult> evaluate_nodes_serial(const Model& model, const SummaryMap& map, const MarginalBank* bank,
                                              const Eigen::MatrixXd& nodes, std::uint64_t seed,
                                              const NodeOptions& options) {
  std::vector<NodeResult> out(static_cast<std::size_t>(nodes.rows()));
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = evaluate_indexed(model, map, bank, nodes, seed, options, i);
  }
  return out;
}

std::vector<NodeResult> evaluate_nodes(const Model& model, const SummaryMap& map, const MarginalBank* bank,
                                       const Eigen::MatrixXd& nodes, std::uint64_t seed, const NodeOptions& options,
                                       int workers) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  const Eigen::Index n = nodes.rows();
  std::vector<NodeResult> out(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = evaluate_indexed(model, map, bank, nodes, seed, options, i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  // Lowest failing index wins, so the reported error is schedule independent.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Eigen::VectorXd node_log_posterior(const Model& model, const Eigen::MatrixXd& nodes,
                                   const std::vector<NodeResult>& results, Method method,
                                   const Eigen::VectorXd& psi0, const Eigen::VectorXd& phi0) {
  if (static_cast<std::size_t>(nodes.rows()) != results.size()) throw ConfigError("node/result count mismatch");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd out(nodes.rows());
  for (Eigen::Index g = 0; g < nodes.rows(); ++g) {
    const NodeResult& r = results[static_cast<std::size_t>(g)];
    const double lp = model.prior.log_density(nodes.row(g).transpose());
    if (!r.ok || !std::isfinite(lp)) {
      out[g] = kNegInf;
      continue;
    }
    if (method == Method::Lfire) {
      if (!r.ratio && r.failure.empty()) throw ConfigError("node has no ratio fit");
      out[g] = r.ratio ? lp + r.ratio->log_ratio(psi0) : kNegInf;
    } else {
      if (!r.synthetic && r.failure.empty()) throw ConfigError("node has no synthetic likelihood fit");
      out[g] = r.synthetic ? lp + r.synthetic->log_density(phi0) : kNegInf;
    }
  }
  return out;
}

GridPosterior grid_from_nodes(const Model& model, const GridAxes& axes, const std::vector<NodeResult>& results,
                              Method method, const Eigen::VectorXd& psi0, const Eigen::VectorXd& phi0) {
  if (axes.size() != model.prior.dimension()) throw ConfigError("grid dimension differs from the parameter dimension");
  const Eigen::MatrixXd nodes = grid_nodes(axes);
  std::vector<char> support(static_cast<std::size_t>(nodes.rows()));
  for (Eigen::Index g = 0; g < nodes.rows(); ++g) {
    support[static_cast<std::size_t>(g)] = model.prior.contains(nodes.row(g).transpose());
  }
  return normalize_grid(axes, node_log_posterior(model, nodes, results, method, psi0, phi0), std::move(support));
}

WeightedSample sample_from_nodes(const Model& model, const Eigen::MatrixXd& particles,
                                 const std::vector<NodeResult>& results, Method method, const Eigen::VectorXd& psi0,
                                 const Eigen::VectorXd& phi0) {
  // Prior proposals: the prior cancels from the weights.
  Eigen::VectorXd lw = node_log_posterior(model, particles, results, method, psi0, phi0);
  for (Eigen::Index i = 0; i < lw.size(); ++i) {
    if (std::isfinite(lw[i])) lw[i] -= model.prior.log_density(particles.row(i).transpose());
  }
  return normalize_weights(particles, lw);
}

Eigen::VectorXd observed_summary(const SummaryMap& map, const Dataset& x0, std::uint64_t seed,
                                 std::uint64_t dataset) {
  Rng noise = stream_rng(seed, StreamTag::ObservedNoise, dataset);
  return map(x0, &noise);
}

RatioFit log_ratio_at(const Model& model, const Eigen::VectorXd& theta, const MarginalBank& bank,
                      const SummaryMap& map, int n_theta, Rng& rng, const FitOptions& fit) {
  NodeOptions opt;
  opt.n_theta = n_theta;
  opt.fit = fit;
  NodeResult r = evaluate_node(model, map, &bank, theta, rng, opt);
  if (!r.ok || !r.ratio) throw NumericalError("log_ratio_at: " + r.failure);
  return *r.ratio;
}

GridPosterior posterior_on_grid(const Model& model, const Dataset& x0, const GridAxes& axes, std::uint64_t seed,
                                const EngineOptions& options) {
  const SummaryMap map = summary_map_for(model, x0);
  Rng bank_rng = stream_rng(seed, StreamTag::Bank);
  const MarginalBank bank = build_marginal_bank(model, map, options.n_m, bank_rng);
  NodeOptions opt;
  opt.n_theta = options.n_theta;
  opt.fit = options.fit;
  const auto results = evaluate_nodes(model, map, &bank, grid_nodes(axes), seed, opt, options.workers);
  return grid_from_nodes(model, axes, results, Method::Lfire, observed_summary(map, x0, seed), Eigen::VectorXd());
}

WeightedSample importance_posterior(const Model& model, const Dataset& x0, int n_particles, std::uint64_t seed,
                                    const EngineOptions& options) {
  if (n_particles < 1) throw ConfigError("n_particles must be >= 1");
  const SummaryMap map = summary_map_for(model, x0);
  Rng bank_rng = stream_rng(seed, StreamTag::Bank);
  const MarginalBank bank = build_marginal_bank(model, map, options.n_m, bank_rng);
  Rng prng = stream_rng(seed, StreamTag::Particles);
  const Eigen::MatrixXd particles = sample_prior(model.prior, n_particles, prng);
  NodeOptions opt;
  opt.n_theta = options.n_theta;
  opt.fit = options.fit;
  const auto results = evaluate_nodes(model, map, &bank, particles, seed, opt, options.workers);
  return sample_from_nodes(model, particles, results, Method::Lfire, observed_summary(map, x0, seed),
                           Eigen::VectorXd());
}

double bank_ratio_mean(const RatioFit& fit, const MarginalBank& bank) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < bank.stats.rows(); ++i) acc += std::exp(fit.log_ratio(bank.stats.row(i).transpose()));
  return acc / static_cast<double>(bank.stats.rows());
}

}  // namespace lfire
