#pragma once

#include <Eigen/Dense>

#include "lfire/model.hpp"

namespace lfire {

/// Symmetrised KL divergence of two grid posteriors on the same axes.
/// Densities are floored at 1e-300 inside logs; nodes outside either
/// support are dropped.
double skl(const GridPosterior& p, const GridPosterior& q);

/// |est - ref| / |ref| element-wise.
Eigen::VectorXd relative_error(const Eigen::VectorXd& est, const Eigen::VectorXd& ref);
/// Negative entries favour the first method.
Eigen::VectorXd delta_rel_error(const Eigen::VectorXd& re_lfire, const Eigen::VectorXd& re_sl);

/// zeta(t) = (|y - y_sl| - |y - y_hat|) / |y - y_sl| per column (one column per time); 0 where both errors vanish.
Eigen::VectorXd forecast_gain(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_hat,
                              const Eigen::MatrixXd& y_hat_sl);

struct WilcoxonResult {
  /// W+ : sum of the ranks of positive differences.
  double statistic = 0.0;
  double p_value = 1.0;
  int n = 0;
  bool exact = false;
};
/// Two-sided signed-rank test: zeros dropped, midranks for ties, exact
/// enumeration below 20 non-zero differences, otherwise the normal
/// approximation with tie and continuity corrections.
WilcoxonResult wilcoxon_signed_rank(const Eigen::VectorXd& deltas);

/// Linear-interpolation quantile of a sample.
double quantile(Eigen::VectorXd values, double prob);

struct QuantileBand {
  Eigen::VectorXd median, q25, q75;
};
/// Column-wise quartiles of a (replications x times) matrix.
QuantileBand quantile_band(const Eigen::MatrixXd& values_per_time);

}  // namespace lfire
