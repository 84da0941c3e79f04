#include "lfire/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lfire/engine.hpp"
#include "lfire/error.hpp"

namespace lfire {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

double SyntheticLikelihoodFit::log_density(const Eigen::VectorXd& phi) const {
  if (phi.size() != mean.size()) throw ConfigError("synthetic likelihood: statistic dimension mismatch");
  const Eigen::VectorXd z = chol_lower.triangularView<Eigen::Lower>().solve(phi - mean);
  return -0.5 * (static_cast<double>(mean.size()) * kLog2Pi + log_det + z.squaredNorm());
}

SyntheticLikelihoodFit fit_synthetic_likelihood(const Eigen::MatrixXd& phi_sims) {
  const Eigen::Index n = phi_sims.rows();
  const Eigen::Index d = phi_sims.cols();
  if (n < 2) throw ConfigError("synthetic likelihood needs at least 2 simulations");
  if (!phi_sims.allFinite()) throw DegenerateInput("synthetic likelihood: non-finite statistics");
  SyntheticLikelihoodFit fit;
  fit.mean = phi_sims.colwise().mean().transpose();
  const Eigen::MatrixXd centred = phi_sims.rowwise() - fit.mean.transpose();
  const Eigen::MatrixXd sample = (centred.transpose() * centred) / static_cast<double>(n - 1);
  double scale = sample.diagonal().mean();
  // Identical simulations: jitter relative to a unit scale.
  if (!(scale > 0.0)) scale = 1.0;
  auto usable = [](const Eigen::MatrixXd& c) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    return lo > 0.0 && hi / lo <= 1e12;
  };
  fit.cov = sample;
  fit.jitter = 0.0;
  double eps = 1e-6;
  while (!usable(fit.cov)) {
    if (eps > 1e6) throw NumericalError("synthetic likelihood: covariance could not be regularized");
    fit.jitter = eps * scale;
    fit.cov = sample + fit.jitter * Eigen::MatrixXd::Identity(d, d);
    eps *= 10.0;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(fit.cov);
  if (llt.info() != Eigen::Success) throw NumericalError("synthetic likelihood: Cholesky failed");
  fit.chol_lower = llt.matrixL();
  fit.log_det = 2.0 * fit.chol_lower.diagonal().array().log().sum();
  return fit;
}

double synthetic_loglik(const Eigen::MatrixXd& phi_sims, const Eigen::VectorXd& phi_obs) {
  return fit_synthetic_likelihood(phi_sims).log_density(phi_obs);
}

AbcResult abc_select(const Eigen::MatrixXd& thetas, const Eigen::MatrixXd& stats, const Eigen::VectorXd& observed,
                     const AbcOptions& options) {
  const Eigen::Index n = stats.rows();
  if (n < 1 || thetas.rows() != n) throw ConfigError("abc: reference table is empty or misaligned");
  if (stats.cols() != observed.size()) throw ConfigError("abc: statistic dimension mismatch");
  if (options.rate.has_value() == options.threshold.has_value()) {
    throw ConfigError("abc: set exactly one of rate and threshold");
  }
  const Eigen::RowVectorXd mean = stats.colwise().mean();
  Eigen::VectorXd distances = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < stats.cols(); ++j) {
    const double sd = std::sqrt((stats.col(j).array() - mean[j]).square().sum() / static_cast<double>(n));
    if (!(sd > 0.0)) continue;
    distances += ((stats.col(j).array() - observed[j]) / sd).square().matrix();
  }
  distances = distances.cwiseSqrt();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return distances[a] < distances[b]; });
  std::size_t keep = 0;
  AbcResult r;
  if (options.rate) {
    const double rate = *options.rate;
    if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("abc: rate must be in (0, 1]");
    keep = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n)));
    if (keep == 0) throw DegeneratePosterior("abc: rate * n_sims < 1 accepts nothing");
    r.threshold = distances[order[keep - 1]];
  } else {
    r.threshold = *options.threshold;
    while (keep < order.size() && distances[order[keep]] <= r.threshold) ++keep;
    if (keep == 0) throw DegeneratePosterior("abc: no simulation within the threshold");
  }
  r.accepted.resize(static_cast<Eigen::Index>(keep), thetas.cols());
  r.distances.resize(static_cast<Eigen::Index>(keep));
  for (std::size_t i = 0; i < keep; ++i) {
    r.accepted.row(static_cast<Eigen::Index>(i)) = thetas.row(order[i]);
    r.distances[static_cast<Eigen::Index>(i)] = distances[order[i]];
  }
  r.acceptance_rate = static_cast<double>(keep) / static_cast<double>(n);
  return r;
}

AbcResult rejection_abc(const Model& model, const Dataset& x0, const AbcOptions& options, Rng& rng) {
  if (options.n_sims < 1) throw ConfigError("abc: n_sims must be >= 1");
  const SummaryMap map = summary_map_for(model, x0);
  const Eigen::VectorXd observed = map.base_statistics(x0);
  const Eigen::MatrixXd thetas = sample_prior(model.prior, options.n_sims, rng);
  Eigen::MatrixXd stats(options.n_sims, observed.size());
  int redraws = 0;
  for (int i = 0; i < options.n_sims; ++i) {
    stats.row(i) = simulate_with_redraw(model, thetas.row(i).transpose(), rng, options.max_redraws, redraws,
                                        [&](const Dataset& x) { return map.base_statistics(x); })
                       .transpose();
  }
  return abc_select(thetas, stats, observed, options);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

GaussianOracle gaussian_true_posterior(double x0, const GaussianModelSpec& spec, const Eigen::VectorXd& mu_grid) {
  validate(spec);
  const double s2 = spec.sigma_o * spec.sigma_o;
  const double mass =
      normal_cdf((spec.prior_hi - x0) / spec.sigma_o) - normal_cdf((spec.prior_lo - x0) / spec.sigma_o);
  GaussianOracle o;
  const Eigen::Index n = mu_grid.size();
  o.alpha0.resize(n);
  o.alpha1.resize(n);
  o.alpha2.resize(n);
  Eigen::VectorXd logp(n);
  std::vector<char> support(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = mu_grid[i];
    o.alpha0[i] = -mu * mu / (2.0 * s2) - 0.5 * std::log(2.0 * M_PI * s2) - std::log(mass);
    o.alpha1[i] = mu / s2;
    o.alpha2[i] = -1.0 / (2.0 * s2);
    const bool inside = mu > spec.prior_lo && mu < spec.prior_hi;
    support[static_cast<std::size_t>(i)] = inside;
    logp[i] = inside ? o.alpha0[i] + o.alpha1[i] * x0 + o.alpha2[i] * x0 * x0
                     : -std::numeric_limits<double>::infinity();
  }
  o.posterior = normalize_grid({mu_grid}, logp, support);
  return o;
}

GaussHermite gauss_hermite(int order) {
  if (order < 1) throw ConfigError("Gauss-Hermite order must be >= 1");
  // Golub-Welsch: eigen-decomposition of the Jacobi matrix of the Hermite recurrence.
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    j(i, i - 1) = j(i - 1, i) = std::sqrt(i / 2.0);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  GaussHermite gh;
  gh.nodes = es.eigenvalues();
  gh.weights = std::sqrt(M_PI) * es.eigenvectors().row(0).transpose().array().square();
  return gh;
}

double arch_log_likelihood(const Eigen::VectorXd& y, double theta1, double theta2, const GaussHermite& gh) {
  const Eigen::Index T = y.size();
  if (T < 1) throw ConfigError("arch likelihood needs at least one observation");
  auto log_normal = [](double x, double var) { return -0.5 * (kLog2Pi + std::log(var) + x * x / var); };
  // t = 1: y(0) = 0 so y(1) = e(1) ~ N(0, 0.2 + theta2 e(0)^2), e(0) ~ N(0, 1).
  double top = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd terms(gh.nodes.size());
  for (Eigen::Index k = 0; k < gh.nodes.size(); ++k) {
    const double e0 = std::sqrt(2.0) * gh.nodes[k];
    terms[k] = std::log(gh.weights[k] / std::sqrt(M_PI)) + log_normal(y[0], 0.2 + theta2 * e0 * e0);
    top = std::max(top, terms[k]);
  }
  double ll = top + std::log((terms.array() - top).exp().sum());
  double prev_y = y[0];
  double prev_e = y[0];
  for (Eigen::Index t = 1; t < T; ++t) {
    ll += log_normal(y[t] - theta1 * prev_y, 0.2 + theta2 * prev_e * prev_e);
    prev_e = y[t] - theta1 * prev_y;
    prev_y = y[t];
  }
  return ll;
}

GridPosterior arch_true_posterior(const Eigen::VectorXd& y, const GridAxes& axes, const ArchModelSpec& spec,
                                  int order) {
  if (axes.size() != 2) throw ConfigError("arch posterior needs a 2-d grid");
  const GaussHermite gh = gauss_hermite(order);
  const PriorBox prior = prior_of(SimulatorSpec{spec});
  const Eigen::MatrixXd nodes = grid_nodes(axes);
  Eigen::VectorXd logp(nodes.rows());
  std::vector<char> support(static_cast<std::size_t>(nodes.rows()));
  for (Eigen::Index g = 0; g < nodes.rows(); ++g) {
    const Eigen::VectorXd th = nodes.row(g).transpose();
    const double lp = prior.log_density(th);
    support[static_cast<std::size_t>(g)] = std::isfinite(lp);
    logp[g] = std::isfinite(lp) ? lp + arch_log_likelihood(y, th[0], th[1], gh) : lp;
  }
  return normalize_grid(axes, logp, support);
}

GridPosterior synthetic_posterior_on_grid(const Model& model, const Dataset& x0, const GridAxes& axes, int n_theta,
                                          std::uint64_t seed, int workers) {
  const SummaryMap map = summary_map_for(model, x0);
  NodeOptions opt;
  opt.n_theta = n_theta;
  opt.lfire = false;
  opt.synthetic = true;
  const Eigen::MatrixXd nodes = grid_nodes(axes);
  const auto results = evaluate_nodes(model, map, nullptr, nodes, seed, opt, workers);
  return grid_from_nodes(model, axes, results, Method::SyntheticLikelihood, Eigen::VectorXd(),
                         map.raw_statistics(x0));
}

}  // namespace lfire
