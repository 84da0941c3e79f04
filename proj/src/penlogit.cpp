#include "lfire/penlogit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lfire/error.hpp"

namespace lfire {

namespace {

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

bool column_is_constant(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::Index j) {
  const double ref = a.rows() > 0 ? a(0, j) : b(0, j);
  return (a.col(j).array() == ref).all() && (b.col(j).array() == ref).all();
}

std::vector<double> log_spaced(double hi, double lo, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = hi;
    return out;
  }
  const double lhi = std::log(hi);
  const double llo = std::log(lo);
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = std::exp(lhi + (llo - lhi) * k / (n - 1));
  out.front() = hi;
  out.back() = lo;
  return out;
}

// Coordinate-descent solver for the standardized problem
//   min_c  mean_i softplus-loss(y_i, (Z c)_i + offset) + lambda * sum_{j>0} |c_j|
// where column 0 of Z is the unpenalized intercept.
class PathSolver {
 public:
  PathSolver(const Design& design, const Standardization& stdz, const PathOptions& opt)
      : opt_(opt), n_(design.n_total()), offset_(-std::log(design.nu())) {
    for (Eigen::Index j = 0; j < design.cols(); ++j) {
      if (stdz.active[static_cast<std::size_t>(j)]) columns_.push_back(j);
    }
    const auto p = static_cast<Eigen::Index>(columns_.size());
    z_.resize(n_, p + 1);
    z_.col(0).setOnes();
    for (Eigen::Index c = 0; c < p; ++c) {
      const Eigen::Index j = columns_[static_cast<std::size_t>(c)];
      z_.col(c + 1).head(design.n_theta()) =
          (design.theta_class().col(j).array() - stdz.center[j]) / stdz.scale[j];
      z_.col(c + 1).tail(design.n_marginal()) =
          (design.marginal_class().col(j).array() - stdz.center[j]) / stdz.scale[j];
    }
    y_.setZero(n_);
    y_.head(design.n_theta()).setOnes();
    sign_ = (1.0 - 2.0 * y_.array()).matrix();
    coef_.setZero(p + 1);
    // Intercept-only optimum: sigmoid(c0 + offset) = n_theta / n  =>  c0 = 0.
    eta_.setZero(n_);
    update_probabilities();
    grad_ = z_.transpose() * (prob_ - y_) / static_cast<double>(n_);
  }

  [[nodiscard]] double lambda0() const {
    if (z_.cols() <= 1) return 0.0;
    return grad_.tail(z_.cols() - 1).cwiseAbs().maxCoeff();
  }

  // Solves at `lambda`, warm-started from the current state. Returns the number
  // of Newton iterations used.
  int solve(double lambda, double lambda_prev, int lambda_index) {
    const Eigen::Index q = z_.cols();
    std::vector<char> in_set(static_cast<std::size_t>(q), 0);
    std::vector<int> set;
    auto add = [&](Eigen::Index j) {
      if (!in_set[static_cast<std::size_t>(j)]) {
        in_set[static_cast<std::size_t>(j)] = 1;
        set.push_back(static_cast<int>(j));
      }
    };
    add(0);
    const double strong = 2.0 * lambda - lambda_prev;
    for (Eigen::Index j = 1; j < q; ++j) {
      if (coef_[j] != 0.0 || std::fabs(grad_[j]) >= strong) add(j);
    }
    int newton_total = 0;
    sweeps_ = 0;
    for (;;) {
      std::sort(set.begin(), set.end());
      newton_total += newton(set, lambda, lambda_index);
      grad_.noalias() = z_.transpose() * (prob_ - y_);
      grad_ /= static_cast<double>(n_);
      bool violated = false;
      for (Eigen::Index j = 1; j < q; ++j) {
        if (!in_set[static_cast<std::size_t>(j)] && std::fabs(grad_[j]) > lambda) {
          add(j);
          violated = true;
        }
      }
      if (!violated) break;
    }
    return newton_total;
  }

  [[nodiscard]] const Eigen::VectorXd& coef() const { return coef_; }
  [[nodiscard]] const std::vector<Eigen::Index>& columns() const { return columns_; }

 private:
  void update_probabilities() {
    // exp(-m) may overflow to inf, which still yields the correct limit 0.
    prob_ = (1.0 + (-(eta_.array() + offset_)).exp()).inverse().matrix();
  }

  double objective(const Eigen::VectorXd& eta, const Eigen::VectorXd& coef, double lambda) const {
    // y = 1 rows lose softplus(-m), y = 0 rows softplus(m); sign_ carries the flip.
    const Eigen::ArrayXd m = (eta.array() + offset_) * sign_.array();
    const double loss = (m.max(0.0) + (-m.abs()).exp().log1p()).sum();
    return loss / static_cast<double>(n_) + lambda * coef.tail(coef.size() - 1).lpNorm<1>();
  }

  // Feature-sign active-set solve of the quadratic model
  //   q(u) = 1/2 (u-c)' H (u-c) + g'(u-c) + lambda sum_pen |u|,  u = c + delta,
  // started from the current CD iterate. Each step solves the model on the
  // active set with fixed signs, then stops at the best zero crossing along the
  // segment; zero coordinates violating KKT join the active set. Returns false
  // (delta untouched) on a singular active block or when the step cap is hit.
  bool active_set_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, const Eigen::VectorXd& c,
                     const std::vector<int>& set, double lambda, Eigen::VectorXd& delta) const {
    const auto s = static_cast<Eigen::Index>(set.size());
    auto pen = [&](Eigen::Index a) { return set[static_cast<std::size_t>(a)] != 0; };
    auto q = [&](const Eigen::VectorXd& u) {
      const Eigen::VectorXd d = u - c;
      double l1 = 0.0;
      for (Eigen::Index a = 0; a < s; ++a) {
        if (pen(a)) l1 += std::fabs(u[a]);
      }
      return 0.5 * d.dot(h * d) + g.dot(d) + lambda * l1;
    };
    Eigen::VectorXd u = c + delta;
    std::vector<double> sgn(static_cast<std::size_t>(s), 0.0);
    std::vector<char> active(static_cast<std::size_t>(s), 0);
    for (Eigen::Index a = 0; a < s; ++a) {
      active[static_cast<std::size_t>(a)] = !pen(a) || u[a] != 0.0;
      if (pen(a)) sgn[static_cast<std::size_t>(a)] = u[a] > 0.0 ? 1.0 : (u[a] < 0.0 ? -1.0 : 0.0);
    }
    const int cap = 50 + 10 * static_cast<int>(s);
    for (int step = 0; step < cap; ++step) {
      std::vector<Eigen::Index> act;
      for (Eigen::Index a = 0; a < s; ++a) {
        if (active[static_cast<std::size_t>(a)]) act.push_back(a);
      }
      const auto k = static_cast<Eigen::Index>(act.size());
      const Eigen::VectorXd r = g + h * (u - c);
      Eigen::MatrixXd haa(k, k);
      Eigen::VectorXd rhs(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        const Eigen::Index ai = act[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < k; ++j) haa(i, j) = h(ai, act[static_cast<std::size_t>(j)]);
        rhs[i] = r[ai] + lambda * sgn[static_cast<std::size_t>(ai)];
      }
      const Eigen::LLT<Eigen::MatrixXd> llt(haa);
      if (llt.info() != Eigen::Success) return false;
      const Eigen::VectorXd move = -llt.solve(rhs);
      Eigen::VectorXd target = u;
      for (Eigen::Index i = 0; i < k; ++i) target[act[static_cast<std::size_t>(i)]] += move[i];
      // Candidates: the full step and every sign change along the way.
      Eigen::VectorXd best = target;
      double best_q = q(target);
      bool crossed = false;
      for (Eigen::Index i = 0; i < k; ++i) {
        const Eigen::Index a = act[static_cast<std::size_t>(i)];
        const double sa = sgn[static_cast<std::size_t>(a)];
        if (!pen(a) || target[a] * sa > 0.0) continue;
        const double t = u[a] == 0.0 ? 0.0 : u[a] / (u[a] - target[a]);
        Eigen::VectorXd cand = u + t * (target - u);
        cand[a] = 0.0;
        const double qc = q(cand);
        if (qc < best_q) {
          best = cand;
          best_q = qc;
          crossed = true;
        }
      }
      if (!crossed) {
        // Signs consistent with the full step: clip any coordinate that landed on the wrong side.
        for (Eigen::Index i = 0; i < k; ++i) {
          const Eigen::Index a = act[static_cast<std::size_t>(i)];
          if (pen(a) && best[a] * sgn[static_cast<std::size_t>(a)] <= 0.0) best[a] = 0.0;
        }
      }
      u = best;
      bool changed = false;
      for (Eigen::Index a = 0; a < s; ++a) {
        if (pen(a) && active[static_cast<std::size_t>(a)] && u[a] == 0.0) {
          active[static_cast<std::size_t>(a)] = 0;
          sgn[static_cast<std::size_t>(a)] = 0.0;
          changed = true;
        }
      }
      if (changed) continue;
      // Active block optimal; add the worst KKT violator among zero coordinates.
      const Eigen::VectorXd r2 = g + h * (u - c);
      Eigen::Index worst = -1;
      double worst_v = lambda * (1.0 + 1e-9) + 1e-15;
      for (Eigen::Index a = 0; a < s; ++a) {
        if (active[static_cast<std::size_t>(a)]) continue;
        if (std::fabs(r2[a]) > worst_v) {
          worst_v = std::fabs(r2[a]);
          worst = a;
        }
      }
      if (worst < 0) {
        delta = u - c;
        return true;
      }
      active[static_cast<std::size_t>(worst)] = 1;
      sgn[static_cast<std::size_t>(worst)] = r2[worst] > 0.0 ? -1.0 : 1.0;
    }
    return false;
  }

  int newton(const std::vector<int>& set, double lambda, int lambda_index) {
    const auto s = static_cast<Eigen::Index>(set.size());
    const double inv_n = 1.0 / static_cast<double>(n_);
    Eigen::MatrixXd zs = z_(Eigen::all, set);
    Eigen::MatrixXd wz(n_, s);
    Eigen::MatrixXd h(s, s);
    Eigen::VectorXd g(s), delta(s), qgrad(s), w(n_);
    Eigen::VectorXd coef_s(s);
    for (Eigen::Index a = 0; a < s; ++a) coef_s[a] = coef_[set[static_cast<std::size_t>(a)]];

    double f_old = objective(eta_, coef_, lambda);
    bool refresh = true;
    int stale = 0;
    double prev_change = std::numeric_limits<double>::infinity();
    constexpr int kMaxNewton = 200;
    for (int it = 1; it <= kMaxNewton; ++it) {
      const Eigen::VectorXd resid = prob_ - y_;
      g.noalias() = zs.transpose() * resid;
      g *= inv_n;
      // A stale Hessian only rescales the step; the fixed point is unchanged.
      if (refresh) {
        w = (prob_.array() * (1.0 - prob_.array())).max(1e-12).sqrt().matrix();
        wz = zs.array().colwise() * w.array();
        h.setZero();
        h.selfadjointView<Eigen::Lower>().rankUpdate(wz.transpose(), inv_n);
        h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
      }

      // Coordinate descent on the quadratic model in delta.
      delta.setZero();
      qgrad = g;
      std::vector<char> support(static_cast<std::size_t>(s), 0), last(static_cast<std::size_t>(s), 2);
      for (int sweep = 1;; ++sweep) {
        if (++sweeps_ > opt_.max_sweeps) {
          std::ostringstream msg;
          msg << "coordinate descent did not converge within " << opt_.max_sweeps << " sweeps at lambda index "
              << lambda_index;
          throw NonConvergence(msg.str(), lambda_index);
        }
        double max_change = 0.0;
        for (Eigen::Index a = 0; a < s; ++a) {
          const double haa = h(a, a);
          if (!(haa > 0.0)) continue;
          const double old = coef_s[a] + delta[a];
          const double updated = set[static_cast<std::size_t>(a)] == 0
                                     ? old - qgrad[a] / haa
                                     : soft_threshold(haa * old - qgrad[a], lambda) / haa;
          const double d = updated - old;
          if (d != 0.0) {
            delta[a] += d;
            qgrad.noalias() += h.col(a) * d;
            max_change = std::max(max_change, std::fabs(d));
          }
        }
        if (max_change < 0.1 * opt_.tolerance) break;
        for (Eigen::Index a = 0; a < s; ++a) {
          const double u = coef_s[a] + delta[a];
          support[static_cast<std::size_t>(a)] = u > 0.0 ? 1 : (u < 0.0 ? -1 : 0);
        }
        if (sweep % 4 == 0 && (support == last || sweep >= 32) && active_set_qp(h, g, coef_s, set, lambda, delta)) {
          break;
        }
        last = support;
      }

      // Damped step: halve until the penalized objective does not increase.
      Eigen::VectorXd dz = zs * delta;
      double step = 1.0;
      Eigen::VectorXd coef_try = coef_;
      Eigen::VectorXd eta_try;
      double f_new = 0.0;
      for (int half = 0; half < 40; ++half) {
        for (Eigen::Index a = 0; a < s; ++a) coef_try[set[static_cast<std::size_t>(a)]] = coef_s[a] + step * delta[a];
        eta_try = eta_ + step * dz;
        f_new = objective(eta_try, coef_try, lambda);
        if (f_new <= f_old + 1e-12 * std::fabs(f_old)) break;
        step *= 0.5;
      }
      const double change = step * delta.cwiseAbs().maxCoeff();
      if (step < 1.0 && !refresh) {
        // Reject a poor step taken with a stale Hessian and retry with a fresh one.
        refresh = true;
        continue;
      }
      coef_ = coef_try;
      coef_s += step * delta;
      eta_ = eta_try;
      f_old = f_new;
      update_probabilities();
      if (change < opt_.tolerance) return it;
      // Reuse the Hessian only while steps are small and shrinking fast.
      stale = refresh ? 0 : stale + 1;
      refresh = change > 1e-1 || change > 0.25 * prev_change || stale >= 2;
      prev_change = change;
    }
    std::ostringstream msg;
    msg << "Newton iterations did not converge at lambda index " << lambda_index;
    throw NonConvergence(msg.str(), lambda_index);
  }

  const PathOptions& opt_;
  Eigen::Index n_;
  double offset_;
  std::vector<Eigen::Index> columns_;
  Eigen::MatrixXd z_;
  Eigen::VectorXd y_, sign_, coef_, eta_, prob_, grad_;
  std::int64_t sweeps_ = 0;
};

}  // namespace

Design::Design(Eigen::MatrixXd theta_class, Eigen::MatrixXd marginal_class)
    : theta_(std::move(theta_class)), marginal_(std::move(marginal_class)) {
  if (theta_.rows() < 1 || marginal_.rows() < 1) throw ConfigError("design: both classes need at least one row");
  if (theta_.cols() != marginal_.cols()) throw ConfigError("design: classes have different column counts");
  if (!theta_.allFinite() || !marginal_.allFinite()) throw DegenerateInput("design: non-finite summary statistics");
}

Design Design::subset(const std::vector<Eigen::Index>& theta_rows,
                      const std::vector<Eigen::Index>& marginal_rows) const {
  return Design(theta_(theta_rows, Eigen::all), marginal_(marginal_rows, Eigen::all));
}

double logistic_loss(const Eigen::VectorXd& beta, double intercept, const Design& design) {
  const double log_nu = std::log(design.nu());
  double acc = 0.0;
  // log(1 + nu e^{-h}) = softplus(log nu - h);  log(1 + e^{h}/nu) = softplus(h - log nu)
  const Eigen::VectorXd ht = (design.theta_class() * beta).array() + intercept;
  const Eigen::VectorXd hm = (design.marginal_class() * beta).array() + intercept;
  for (Eigen::Index i = 0; i < ht.size(); ++i) acc += softplus(log_nu - ht[i]);
  for (Eigen::Index i = 0; i < hm.size(); ++i) acc += softplus(hm[i] - log_nu);
  return acc / static_cast<double>(design.n_total());
}

LossGradient logistic_loss_gradient(const Eigen::VectorXd& beta, double intercept, const Design& design) {
  const double log_nu = std::log(design.nu());
  const double inv_n = 1.0 / static_cast<double>(design.n_total());
  Eigen::VectorXd rt = (design.theta_class() * beta).array() + intercept;
  Eigen::VectorXd rm = (design.marginal_class() * beta).array() + intercept;
  for (Eigen::Index i = 0; i < rt.size(); ++i) rt[i] = sigmoid(rt[i] - log_nu) - 1.0;
  for (Eigen::Index i = 0; i < rm.size(); ++i) rm[i] = sigmoid(rm[i] - log_nu);
  LossGradient g;
  g.beta = (design.theta_class().transpose() * rt + design.marginal_class().transpose() * rm) * inv_n;
  g.intercept = (rt.sum() + rm.sum()) * inv_n;
  return g;
}

Standardization standardize(const Design& design) {
  const Eigen::Index b = design.cols();
  const auto n = static_cast<double>(design.n_total());
  Standardization s;
  s.center.resize(b);
  s.scale.resize(b);
  s.active.assign(static_cast<std::size_t>(b), false);
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& t = design.theta_class().col(j);
    const auto& m = design.marginal_class().col(j);
    const double mean = (t.sum() + m.sum()) / n;
    const double var = ((t.array() - mean).square().sum() + (m.array() - mean).square().sum()) / n;
    s.center[j] = mean;
    if (column_is_constant(design.theta_class(), design.marginal_class(), j) || !(var > 0.0)) {
      s.scale[j] = 1.0;
    } else {
      s.scale[j] = std::sqrt(var);
      s.active[static_cast<std::size_t>(j)] = true;
    }
  }
  return s;
}

double lambda_max(const Design& design) {
  const Standardization s = standardize(design);
  PathOptions opt;
  return PathSolver(design, s, opt).lambda0();
}

Eigen::VectorXd PathFit::beta_original(std::size_t k) const {
  return betas[k].cwiseQuotient(standardization.scale);
}

double PathFit::intercept_original(std::size_t k) const {
  return intercepts[k] - betas[k].cwiseQuotient(standardization.scale).dot(standardization.center);
}

double PathFit::log_ratio(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& psi) const {
  return intercepts[k] +
         ((psi - standardization.center).cwiseQuotient(standardization.scale)).dot(betas[k]);
}

int PathFit::nonzero(std::size_t k) const { return static_cast<int>((betas[k].array() != 0.0).count()); }

PathFit fit_l1_path(const Design& design, const PathOptions& options) {
  PathFit fit;
  fit.standardization = standardize(design);
  fit.nu = design.nu();
  PathSolver solver(design, fit.standardization, options);
  fit.lambda0 = solver.lambda0();
  if (!options.lambdas.empty()) {
    fit.lambdas = options.lambdas;
    for (std::size_t k = 1; k < fit.lambdas.size(); ++k) {
      if (!(fit.lambdas[k] < fit.lambdas[k - 1])) throw ConfigError("lambda sequence must be strictly decreasing");
    }
  } else {
    if (options.n_lambda < 2) throw ConfigError("n_lambda must be >= 2");
    if (!(options.lambda_ratio > 0.0 && options.lambda_ratio < 1.0)) throw ConfigError("lambda_ratio must be in (0, 1)");
    // A design without informative columns still gets a valid, all-zero path.
    const double top = fit.lambda0 > 0.0 ? fit.lambda0 : 1.0;
    fit.lambdas = log_spaced(top, options.lambda_ratio * top, options.n_lambda);
  }
  const Eigen::Index b = design.cols();
  double prev = std::max(fit.lambdas.front(), fit.lambda0);
  for (std::size_t k = 0; k < fit.lambdas.size(); ++k) {
    const double lambda = fit.lambdas[k];
    fit.newton_iterations.push_back(solver.solve(lambda, prev, static_cast<int>(k)));
    prev = lambda;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(b);
    const auto& cols = solver.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) beta[cols[c]] = solver.coef()[static_cast<Eigen::Index>(c) + 1];
    fit.betas.push_back(std::move(beta));
    fit.intercepts.push_back(solver.coef()[0]);
  }
  return fit;
}

double penalized_objective(const Design& design, const PathFit& path, std::size_t k) {
  return logistic_loss(path.beta_original(k), path.intercept_original(k), design) +
         path.lambdas[k] * path.betas[k].lpNorm<1>();
}

Eigen::VectorXd standardized_gradient(const Design& design, const PathFit& path, std::size_t k) {
  const LossGradient g = logistic_loss_gradient(path.beta_original(k), path.intercept_original(k), design);
  // h = b0 + sum_j beta_j (x_j - center_j) / scale_j
  Eigen::VectorXd out = Eigen::VectorXd::Zero(design.cols());
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    if (!path.standardization.active[static_cast<std::size_t>(j)]) continue;
    out[j] = (g.beta[j] - path.standardization.center[j] * g.intercept) / path.standardization.scale[j];
  }
  return out;
}

CvSelection cv_prediction_risk(const Design& design, const PathFit& path, int folds, Rng& rng,
                               const PathOptions& options) {
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (design.n_theta() < folds || design.n_marginal() < folds) {
    throw ConfigError("cross-validation: each class needs at least as many rows as folds");
  }
  CvSelection sel;
  sel.folds = folds;
  auto assign = [&](Eigen::Index n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (Eigen::Index pos = 0; pos < n; ++pos) fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos)])] = static_cast<int>(pos % folds);
    return fold;
  };
  sel.fold_theta = assign(design.n_theta());
  sel.fold_marginal = assign(design.n_marginal());

  const std::size_t nl = path.size();
  std::vector<double> errors(nl, 0.0);
  PathOptions fold_opt = options;
  fold_opt.lambdas = path.lambdas;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr_t, tr_m, te_t, te_m;
    for (Eigen::Index i = 0; i < design.n_theta(); ++i) {
      (sel.fold_theta[static_cast<std::size_t>(i)] == f ? te_t : tr_t).push_back(i);
    }
    for (Eigen::Index i = 0; i < design.n_marginal(); ++i) {
      (sel.fold_marginal[static_cast<std::size_t>(i)] == f ? te_m : tr_m).push_back(i);
    }
    const Design train = design.subset(tr_t, tr_m);
    const PathFit fp = fit_l1_path(train, fold_opt);
    // Held-out class probability P = 1 / (1 + nu e^{-h}) compared with 0.5,
    // i.e. h compared with log nu.
    const double log_nu = std::log(fp.nu);
    for (std::size_t k = 0; k < nl; ++k) {
      double e = 0.0;
      for (auto i : te_t) {
        const double d = fp.log_ratio(k, design.theta_class().row(i).transpose()) - log_nu;
        e += d < 0.0 ? 1.0 : (d == 0.0 ? 0.5 : 0.0);
      }
      for (auto i : te_m) {
        const double d = fp.log_ratio(k, design.marginal_class().row(i).transpose()) - log_nu;
        e += d > 0.0 ? 1.0 : (d == 0.0 ? 0.5 : 0.0);
      }
      errors[k] += e;
    }
  }
  sel.risk.resize(nl);
  const auto n = static_cast<double>(design.n_total());
  for (std::size_t k = 0; k < nl; ++k) sel.risk[k] = errors[k] / n;
  // First minimum along a decreasing sequence = largest lambda among ties.
  sel.index_min = static_cast<std::size_t>(std::min_element(sel.risk.begin(), sel.risk.end()) - sel.risk.begin());
  sel.lambda_min = path.lambdas[sel.index_min];
  return sel;
}

namespace {

RatioFit to_ratio_fit(const PathFit& path, std::size_t k, std::optional<Eigen::Index> constant_column,
                      const Design& design) {
  RatioFit fit;
  fit.beta = path.beta_original(k);
  fit.intercept = path.intercept_original(k);
  fit.lambda_min = path.lambdas[k];
  fit.lambda_index = k;
  fit.nonzero = path.nonzero(k);
  if (constant_column) {
    const Eigen::Index c = *constant_column;
    const double value = design.theta_class()(0, c);
    if (value != 0.0 && !path.standardization.active[static_cast<std::size_t>(c)]) {
      fit.beta[c] += fit.intercept / value;
      fit.intercept = 0.0;
    }
  }
  return fit;
}

}  // namespace

RatioFitDetails fit_ratio_detailed(const Design& design, Rng& rng, const FitOptions& options) {
  RatioFitDetails out;
  if (options.fixed_lambda) {
    PathOptions po = options.path;
    const double l0 = lambda_max(design);
    const double target = *options.fixed_lambda;
    if (!(target > 0.0)) throw ConfigError("fixed lambda must be > 0");
    if (target >= l0 || l0 == 0.0) {
      po.lambdas = {target};
    } else {
      po.lambdas = log_spaced(l0, target, std::max(2, options.path.n_lambda));
    }
    out.path = fit_l1_path(design, po);
    out.fit = to_ratio_fit(out.path, out.path.size() - 1, options.constant_column, design);
    return out;
  }
  out.path = fit_l1_path(design, options.path);
  out.cv = cv_prediction_risk(design, out.path, options.folds, rng, options.path);
  out.fit = to_ratio_fit(out.path, out.cv->index_min, options.constant_column, design);
  out.fit.cv_risk = out.cv->risk[out.cv->index_min];
  return out;
}

RatioFit fit_ratio(const Design& design, Rng& rng, const FitOptions& options) {
  return fit_ratio_detailed(design, rng, options).fit;
}

}  // namespace lfire
