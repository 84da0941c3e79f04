#pragma once

#include <optional>

#include <Eigen/Dense>

#include "lfire/model.hpp"

namespace lfire {

/// Gaussian fitted to simulated statistics phi, with the diagonal jitter that
/// made its covariance usable.
struct SyntheticLikelihoodFit {
  Eigen::VectorXd mean;
  /// Unbiased sample covariance plus jitter * I.
  Eigen::MatrixXd cov;
  double jitter = 0.0;
  Eigen::MatrixXd chol_lower;
  double log_det = 0.0;

  [[nodiscard]] double log_density(const Eigen::VectorXd& phi) const;
};

/// Throws ConfigError for fewer than two rows.
SyntheticLikelihoodFit fit_synthetic_likelihood(const Eigen::MatrixXd& phi_sims);
double synthetic_loglik(const Eigen::MatrixXd& phi_sims, const Eigen::VectorXd& phi_obs);

struct AbcResult {
  Eigen::MatrixXd accepted;
  Eigen::VectorXd distances;
  double threshold = 0.0;
  double acceptance_rate = 0.0;
};

struct AbcOptions {
  int n_sims = 10000;
  /// Exactly one of rate / threshold must be set.
  std::optional<double> rate;
  std::optional<double> threshold;
  int max_redraws = 10;
};

/// Selection step on a reference table: distances are Euclidean on
/// coordinates scaled by their standard deviation over all rows; zero-spread
/// coordinates are ignored.
AbcResult abc_select(const Eigen::MatrixXd& thetas, const Eigen::MatrixXd& stats, const Eigen::VectorXd& observed,
                     const AbcOptions& options);

/// Rejection ABC on the model's base statistics (before expansion and noise).
AbcResult rejection_abc(const Model& model, const Dataset& x0, const AbcOptions& options, Rng& rng);

struct GaussianOracle {
  GridPosterior posterior;
  Eigen::VectorXd alpha0, alpha1, alpha2;
};

double normal_cdf(double z);
/// Closed-form posterior of the mean under the uniform prior, with the
/// coefficient curves of log p(mu | x0) in (1, x0, x0^2).
GaussianOracle gaussian_true_posterior(double x0, const GaussianModelSpec& spec, const Eigen::VectorXd& mu_grid);

/// Gauss-Hermite nodes and weights for the weight exp(-x^2).
struct GaussHermite {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
GaussHermite gauss_hermite(int order);

/// Exact ARCH(1) log-likelihood of y(1..T) with e(0) integrated out.
double arch_log_likelihood(const Eigen::VectorXd& y, double theta1, double theta2, const GaussHermite& gh);
GridPosterior arch_true_posterior(const Eigen::VectorXd& y, const GridAxes& axes, const ArchModelSpec& spec,
                                  int order = 64);

/// Prior times synthetic likelihood of the raw statistics, on a grid.
GridPosterior synthetic_posterior_on_grid(const Model& model, const Dataset& x0, const GridAxes& axes, int n_theta,
                                          std::uint64_t seed, int workers = 1);

}  // namespace lfire
