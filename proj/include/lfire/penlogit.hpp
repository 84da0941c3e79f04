#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lfire/rng.hpp"

namespace lfire {

/// Two-class training set: rows of psi(x) simulated at a fixed theta (label 1)
/// and from the marginal (label 0). Immutable after construction.
class Design {
 public:
  Design(Eigen::MatrixXd theta_class, Eigen::MatrixXd marginal_class);

  [[nodiscard]] const Eigen::MatrixXd& theta_class() const { return theta_; }
  [[nodiscard]] const Eigen::MatrixXd& marginal_class() const { return marginal_; }
  [[nodiscard]] Eigen::Index n_theta() const { return theta_.rows(); }
  [[nodiscard]] Eigen::Index n_marginal() const { return marginal_.rows(); }
  [[nodiscard]] Eigen::Index n_total() const { return theta_.rows() + marginal_.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return theta_.cols(); }
  /// Class-imbalance factor n_m / n_theta.
  [[nodiscard]] double nu() const {
    return static_cast<double>(marginal_.rows()) / static_cast<double>(theta_.rows());
  }

  /// Sub-design from row subsets of each class.
  [[nodiscard]] Design subset(const std::vector<Eigen::Index>& theta_rows,
                              const std::vector<Eigen::Index>& marginal_rows) const;

 private:
  Eigen::MatrixXd theta_;
  Eigen::MatrixXd marginal_;
};

/// Loss with h(x) = intercept + beta' psi(x):
/// J = 1/(n_t+n_m) { sum_theta log(1 + nu e^{-h}) + sum_m log(1 + e^{h} / nu) }.
double logistic_loss(const Eigen::VectorXd& beta, double intercept, const Design& design);

struct LossGradient {
  Eigen::VectorXd beta;
  double intercept = 0.0;
};
LossGradient logistic_loss_gradient(const Eigen::VectorXd& beta, double intercept, const Design& design);

/// Pooled column centring and scaling. Constant columns keep scale 1 and are
/// never penalized or fitted; the intercept plays their role.
struct Standardization {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  std::vector<bool> active;  // false for constant columns
};

Standardization standardize(const Design& design);

/// Smallest lambda with an all-zero penalized solution, on the standardized scale.
double lambda_max(const Design& design);

struct PathOptions {
  int n_lambda = 100;
  double lambda_ratio = 1e-4;
  /// Convergence threshold on the largest coefficient change (standardized scale).
  double tolerance = 1e-7;
  /// Coordinate-descent sweep budget per lambda.
  std::int64_t max_sweeps = 100000;
  /// Explicit decreasing lambda sequence; overrides n_lambda/lambda_ratio.
  std::vector<double> lambdas;
};

/// Regularisation path. Coefficients are stored on the standardized scale:
/// h(x) = intercept + sum_j beta_j (x_j - center_j) / scale_j.
struct PathFit {
  std::vector<double> lambdas;
  std::vector<Eigen::VectorXd> betas;
  std::vector<double> intercepts;
  Standardization standardization;
  double lambda0 = 0.0;
  double nu = 1.0;
  std::vector<int> newton_iterations;

  [[nodiscard]] std::size_t size() const { return lambdas.size(); }
  [[nodiscard]] Eigen::VectorXd beta_original(std::size_t k) const;
  [[nodiscard]] double intercept_original(std::size_t k) const;
  /// h(x) at path point k.
  [[nodiscard]] double log_ratio(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& psi) const;
  [[nodiscard]] int nonzero(std::size_t k) const;
};

PathFit fit_l1_path(const Design& design, const PathOptions& options = {});

/// Penalized objective J + lambda * sum |beta| at a standardized-scale point.
double penalized_objective(const Design& design, const PathFit& path, std::size_t k);

/// Gradient of J with respect to the standardized coefficients at path point k
/// (entries of inactive columns are 0).
Eigen::VectorXd standardized_gradient(const Design& design, const PathFit& path, std::size_t k);

struct CvSelection {
  double lambda_min = 0.0;
  std::size_t index_min = 0;
  std::vector<double> risk;
  int folds = 10;
  std::vector<int> fold_theta;
  std::vector<int> fold_marginal;
};

/// Class-stratified K-fold estimate of the misclassification risk along the
/// path's lambda sequence. A held-out point whose class probability is
/// exactly 0.5 counts as half an error.
CvSelection cv_prediction_risk(const Design& design, const PathFit& path, int folds, Rng& rng,
                               const PathOptions& options = {});

/// Estimated log-ratio h(x) = intercept + beta' psi(x) on the original scale.
struct RatioFit {
  Eigen::VectorXd beta;
  double intercept = 0.0;
  double lambda_min = 0.0;
  std::size_t lambda_index = 0;
  int nonzero = 0;
  double cv_risk = 0.0;

  [[nodiscard]] double log_ratio(const Eigen::Ref<const Eigen::VectorXd>& psi) const {
    return intercept + beta.dot(psi);
  }
};

struct FitOptions {
  PathOptions path;
  int folds = 10;
  /// Skip cross-validation and use the path point closest to this lambda.
  std::optional<double> fixed_lambda;
  /// Column holding the constant statistic; the intercept is folded into it.
  std::optional<Eigen::Index> constant_column;
};

struct RatioFitDetails {
  RatioFit fit;
  PathFit path;
  std::optional<CvSelection> cv;
};

RatioFitDetails fit_ratio_detailed(const Design& design, Rng& rng, const FitOptions& options = {});
RatioFit fit_ratio(const Design& design, Rng& rng, const FitOptions& options = {});

}  // namespace lfire
