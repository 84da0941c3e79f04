#include "lfire/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lfire/error.hpp"

namespace lfire {

double skl(const GridPosterior& p, const GridPosterior& q) {
  if (p.axes.size() != q.axes.size() || p.size() != q.size()) throw ConfigError("skl: grids differ");
  for (std::size_t k = 0; k < p.axes.size(); ++k) {
    if (p.axes[k].size() != q.axes[k].size() ||
        (p.axes[k] - q.axes[k]).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, p.axes[k].cwiseAbs().maxCoeff())) {
      throw ConfigError("skl: grid axes differ");
    }
  }
  constexpr double kFloor = 1e-300;
  double acc = 0.0;
  for (Eigen::Index g = 0; g < p.size(); ++g) {
    if (!p.in_support[static_cast<std::size_t>(g)] || !q.in_support[static_cast<std::size_t>(g)]) continue;
    const double a = p.density[g];
    const double b = q.density[g];
    if (a == 0.0 && b == 0.0) continue;
    const double la = std::log(std::max(a, kFloor));
    const double lb = std::log(std::max(b, kFloor));
    // (a - b)(log a - log b) is symmetric in (a, b) term by term.
    acc += (a - b) * (la - lb);
  }
  return 0.5 * acc * p.cell;
}

Eigen::VectorXd relative_error(const Eigen::VectorXd& est, const Eigen::VectorXd& ref) {
  if (est.size() != ref.size()) throw ConfigError("relative_error: length mismatch");
  Eigen::VectorXd out(est.size());
  for (Eigen::Index i = 0; i < est.size(); ++i) {
    if (ref[i] == 0.0) throw DegenerateInput("relative_error: zero reference entry");
    out[i] = std::fabs(est[i] - ref[i]) / std::fabs(ref[i]);
  }
  return out;
}

Eigen::VectorXd delta_rel_error(const Eigen::VectorXd& re_lfire, const Eigen::VectorXd& re_sl) {
  if (re_lfire.size() != re_sl.size()) throw ConfigError("delta_rel_error: length mismatch");
  return re_lfire - re_sl;
}

Eigen::VectorXd forecast_gain(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_hat,
                              const Eigen::MatrixXd& y_hat_sl) {
  if (y_true.rows() != y_hat.rows() || y_true.cols() != y_hat.cols() || y_true.rows() != y_hat_sl.rows() ||
      y_true.cols() != y_hat_sl.cols()) {
    throw ConfigError("forecast_gain: shape mismatch");
  }
  Eigen::VectorXd z(y_true.cols());
  for (Eigen::Index t = 0; t < y_true.cols(); ++t) {
    const double den = (y_true.col(t) - y_hat_sl.col(t)).norm();
    const double num = (y_true.col(t) - y_hat.col(t)).norm();
    if (den == 0.0 && num == 0.0) {
      z[t] = 0.0;
      continue;
    }
    if (den == 0.0) throw DegenerateInput("forecast_gain: zero reference prediction error at column " + std::to_string(t));
    z[t] = (den - num) / den;
  }
  return z;
}

WilcoxonResult wilcoxon_signed_rank(const Eigen::VectorXd& deltas) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < deltas.size(); ++i) {
    if (!std::isfinite(deltas[i])) throw DegenerateInput("wilcoxon: non-finite difference");
    if (deltas[i] != 0.0) d.push_back(deltas[i]);
  }
  const auto n = static_cast<int>(d.size());
  if (n == 0) throw DegenerateInput("wilcoxon: every difference is zero");
  std::vector<int> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return std::fabs(d[a]) < std::fabs(d[b]); });
  std::vector<double> rank(d.size());
  double tie_term = 0.0;
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && std::fabs(d[order[j + 1]]) == std::fabs(d[order[i]])) ++j;
    const double mid = 0.5 * (i + j) + 1.0;
    for (int k = i; k <= j; ++k) rank[order[k]] = mid;
    const double t = j - i + 1;
    tie_term += t * t * t - t;
    i = j + 1;
  }
  WilcoxonResult r;
  r.n = n;
  for (int i = 0; i < n; ++i) {
    if (d[i] > 0) r.statistic += rank[i];
  }
  const double mean = n * (n + 1) / 4.0;
  if (n < 20) {
    // Exact null distribution of W+ over all 2^n sign patterns of the (mid)ranks.
    // Ranks are half-integers at worst, so doubling makes them integral.
    std::vector<int> r2(d.size());
    int total = 0;
    for (int i = 0; i < n; ++i) {
      r2[i] = static_cast<int>(std::lround(2.0 * rank[i]));
      total += r2[i];
    }
    std::vector<double> count(static_cast<std::size_t>(total + 1), 0.0);
    count[0] = 1.0;
    for (int i = 0; i < n; ++i) {
      for (int s = total; s >= r2[i]; --s) count[s] += count[s - r2[i]];
    }
    const double patterns = std::ldexp(1.0, n);
    const double dev = std::fabs(2.0 * r.statistic - 2.0 * mean);
    double tail = 0.0;
    for (int s = 0; s <= total; ++s) {
      if (std::fabs(s - 2.0 * mean) >= dev - 1e-9) tail += count[s];
    }
    r.p_value = std::min(1.0, tail / patterns);
    r.exact = true;
    return r;
  }
  const double var = n * (n + 1) * (2.0 * n + 1) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) throw DegenerateInput("wilcoxon: zero variance");
  const double dev = std::max(std::fabs(r.statistic - mean) - 0.5, 0.0);
  const double z = dev / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

double quantile(Eigen::VectorXd values, double prob) {
  if (values.size() == 0) throw ConfigError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ConfigError("quantile probability outside [0, 1]");
  std::sort(values.data(), values.data() + values.size());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

QuantileBand quantile_band(const Eigen::MatrixXd& values_per_time) {
  if (values_per_time.rows() < 1) throw ConfigError("quantile_band needs at least one row");
  QuantileBand b;
  const Eigen::Index t = values_per_time.cols();
  b.median.resize(t);
  b.q25.resize(t);
  b.q75.resize(t);
  for (Eigen::Index j = 0; j < t; ++j) {
    const Eigen::VectorXd col = values_per_time.col(j);
    b.median[j] = quantile(col, 0.5);
    b.q25[j] = quantile(col, 0.25);
    b.q75[j] = quantile(col, 0.75);
  }
  return b;
}

}  // namespace lfire
