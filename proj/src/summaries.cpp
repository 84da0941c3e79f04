#include "lfire/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lfire/error.hpp"

namespace lfire {

namespace {

double series_mean(const Eigen::Ref<const Eigen::VectorXd>& x) { return x.mean(); }

// Least-squares coefficients; throws DegenerateInput naming the block when the
// design is rank deficient.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& response, const char* block) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw DegenerateInput(std::string("ricker-wood: singular design in ") + block + " regression");
  }
  return qr.solve(response);
}

std::vector<std::string> pairwise_names(const std::vector<std::string>& base) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < base.size(); ++k) {
    for (std::size_t kk = 0; kk <= k; ++kk) names.push_back(base[k] + "*" + base[kk]);
  }
  return names;
}

}  // namespace

std::string to_string(BaseMap base) {
  switch (base) {
    case BaseMap::GaussianPoly: return "gaussian-poly";
    case BaseMap::Arch: return "arch";
    case BaseMap::RickerWood: return "ricker-wood";
    case BaseMap::LorenzHakkarainen: return "lorenz-hakkarainen";
    case BaseMap::ExternalMatrix: return "external-matrix";
  }
  return "unknown";
}

BaseMap base_map_from_string(const std::string& name) {
  for (auto b : {BaseMap::GaussianPoly, BaseMap::Arch, BaseMap::RickerWood, BaseMap::LorenzHakkarainen,
                 BaseMap::ExternalMatrix}) {
    if (to_string(b) == name) return b;
  }
  throw ConfigError("unknown summary map '" + name + "'");
}

std::string to_string(Expansion e) {
  switch (e) {
    case Expansion::None: return "none";
    case Expansion::Pairwise: return "pairwise";
    case Expansion::Square: return "square";
  }
  return "unknown";
}

Expansion expansion_from_string(const std::string& name) {
  for (auto e : {Expansion::None, Expansion::Pairwise, Expansion::Square}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown expansion '" + name + "'");
}

double autocovariance(const Eigen::Ref<const Eigen::VectorXd>& series, int lag) {
  const Eigen::Index n = series.size();
  if (lag < 0 || lag >= n) throw DegenerateInput("autocovariance: lag must be in [0, n)");
  const double m = series_mean(series);
  double acc = 0.0;
  for (Eigen::Index t = 0; t + lag < n; ++t) acc += (series[t] - m) * (series[t + lag] - m);
  return acc / static_cast<double>(n);
}

double autocorrelation(const Eigen::Ref<const Eigen::VectorXd>& series, int lag) {
  const double var = autocovariance(series, 0);
  if (!(var > 0.0)) throw DegenerateInput("autocorrelation: zero-variance series");
  return autocovariance(series, lag) / var;
}

SummaryVector arch_summaries(const Eigen::Ref<const Eigen::VectorXd>& series) {
  if (series.size() < 6) throw DegenerateInput("arch summaries need at least 6 points");
  SummaryVector rho;
  rho.values.resize(5);
  for (int lag = 1; lag <= 5; ++lag) {
    rho.values[lag - 1] = autocorrelation(series, lag);
    rho.names.push_back("rho" + std::to_string(lag));
  }
  SummaryVector out;
  out.values.resize(23);
  out.values.head(5) = rho.values;
  out.names = rho.names;
  Eigen::Index pos = 5;
  for (int k = 0; k < 5; ++k) {
    for (int kk = 0; kk <= k; ++kk) out.values[pos++] = rho.values[k] * rho.values[kk];
  }
  for (auto& n : pairwise_names(rho.names)) out.names.push_back(std::move(n));
  out.values[pos++] = series_mean(series);
  out.values[pos++] = autocovariance(series, 0);
  out.values[pos++] = 1.0;
  out.names.insert(out.names.end(), {"mean", "var", "const"});
  return out;
}

SummaryVector ricker_wood_summaries(const Eigen::Ref<const Eigen::VectorXd>& series,
                                    const Eigen::Ref<const Eigen::VectorXd>& observed) {
  const Eigen::Index T = series.size();
  if (T != observed.size()) throw DegenerateInput("ricker-wood: series and observed lengths differ");
  if (T < 6) throw DegenerateInput("ricker-wood: series too short");

  SummaryVector out;
  out.values.resize(13);
  out.values[0] = series_mean(series);
  out.values[1] = static_cast<double>((series.array() == 0.0).count());
  for (int lag = 1; lag <= 5; ++lag) out.values[1 + lag] = autocovariance(series, lag);

  auto sorted_diff = [T](const Eigen::Ref<const Eigen::VectorXd>& x) {
    Eigen::VectorXd d = x.tail(T - 1) - x.head(T - 1);
    std::sort(d.data(), d.data() + d.size());
    return d;
  };
  const Eigen::VectorXd d = sorted_diff(series);
  const Eigen::VectorXd d0 = sorted_diff(observed);
  Eigen::MatrixXd cubic(T - 1, 4);
  cubic.col(0).setOnes();
  cubic.col(1) = d0;
  cubic.col(2) = d0.array().square();
  cubic.col(3) = d0.array().cube();
  out.values.segment(7, 4) = least_squares(cubic, d, "cubic");

  Eigen::MatrixXd power(T - 1, 2);
  const Eigen::ArrayXd lagged = series.head(T - 1).array().pow(0.3);
  power.col(0) = lagged.matrix();
  power.col(1) = lagged.square().matrix();
  const Eigen::VectorXd response = series.tail(T - 1).array().pow(0.3).matrix();
  out.values.segment(11, 2) = least_squares(power, response, "power");

  out.names = {"mean", "zeros", "acov1", "acov2", "acov3", "acov4", "acov5",
               "cubic0", "cubic1", "cubic2", "cubic3", "b1", "b2"};
  return out;
}

SummaryVector lorenz_hakkarainen_summaries(const Eigen::MatrixXd& traj) {
  const Eigen::Index K = traj.rows();
  const Eigen::Index L = traj.cols();
  if (K < 3 || L < 3) throw DegenerateInput("lorenz-hakkarainen: need K >= 3 and T >= 2");
  for (Eigen::Index t = 0; t < L; ++t) {
    if (!traj.col(t).allFinite()) throw Divergence("lorenz-hakkarainen: non-finite trajectory", static_cast<int>(t));
  }
  const Eigen::VectorXd m = traj.rowwise().mean();
  const Eigen::MatrixXd c = traj.colwise() - m;
  const double inv_l = 1.0 / static_cast<double>(L);
  double s_mean = 0, s_var = 0, s_acov = 0, s_cov = 0, s_xm = 0, s_xp = 0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const Eigen::Index km = (k + K - 1) % K;
    const Eigen::Index kp = (k + 1) % K;
    s_mean += m[k];
    s_var += c.row(k).squaredNorm() * inv_l;
    s_acov += c.row(k).head(L - 1).dot(c.row(k).tail(L - 1)) * inv_l;
    s_cov += c.row(k).dot(c.row(kp)) * inv_l;
    s_xm += c.row(k).head(L - 1).dot(c.row(km).tail(L - 1)) * inv_l;
    s_xp += c.row(k).head(L - 1).dot(c.row(kp).tail(L - 1)) * inv_l;
  }
  const double inv_k = 1.0 / static_cast<double>(K);
  SummaryVector out;
  out.values.resize(6);
  out.values << s_mean, s_var, s_acov, s_cov, s_xm, s_xp;
  out.values *= inv_k;
  out.names = {"mean", "var", "acov1", "cov_next", "xcov_prev_lag1", "xcov_next_lag1"};
  return out;
}

SummaryVector polynomial_summaries(double x, int degree) {
  if (degree < 0) throw ConfigError("polynomial degree must be >= 0");
  SummaryVector out;
  out.values.resize(degree + 1);
  double p = 1.0;
  for (int k = 0; k <= degree; ++k) {
    out.values[k] = p;
    out.names.push_back("x^" + std::to_string(k));
    p *= x;
  }
  return out;
}

SummaryVector expand_pairwise(const SummaryVector& phi) {
  const Eigen::Index d = phi.size();
  SummaryVector out;
  out.values.resize(d + d * (d + 1) / 2 + 1);
  out.values.head(d) = phi.values;
  Eigen::Index pos = d;
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index kk = 0; kk <= k; ++kk) out.values[pos++] = phi.values[k] * phi.values[kk];
  }
  out.values[pos] = 1.0;
  out.names = phi.names;
  for (auto& n : pairwise_names(phi.names)) out.names.push_back(std::move(n));
  out.names.emplace_back("const");
  return out;
}

SummaryVector cell_square_expand(const SummaryVector& phi) {
  const Eigen::Index d = phi.size();
  SummaryVector out;
  out.values.resize(2 * d + 1);
  out.values.head(d) = phi.values;
  out.values.segment(d, d) = phi.values.array().square().matrix();
  out.values[2 * d] = 1.0;
  out.names = phi.names;
  for (const auto& n : phi.names) out.names.push_back(n + "^2");
  out.names.emplace_back("const");
  return out;
}

SummaryMap::SummaryMap(SummaryMapSpec spec, std::optional<Dataset> reference)
    : spec_(spec), reference_(std::move(reference)) {
  if (spec_.noise_dims < 0) throw ConfigError("noise_dims must be >= 0");
  if (spec_.base == BaseMap::ExternalMatrix && spec_.external_dimension <= 0) {
    throw ConfigError("external-matrix map needs a positive dimension");
  }
  if (spec_.base == BaseMap::RickerWood && !reference_) {
    throw ConfigError("ricker-wood map needs the observed dataset as reference");
  }
  if (spec_.base == BaseMap::Arch && spec_.expansion != Expansion::None) {
    throw ConfigError("arch map already contains its pairwise products; use expansion 'none'");
  }
  // Derive names from a dry run on a synthetic input of the right shape.
  std::vector<std::string> base_names;
  switch (spec_.base) {
    case BaseMap::GaussianPoly: base_names = polynomial_summaries(0.0, spec_.degree).names; break;
    case BaseMap::Arch: base_names = arch_summaries(Eigen::VectorXd::LinSpaced(8, 0.0, 1.0)).names; break;
    case BaseMap::RickerWood:
      base_names = {"mean", "zeros", "acov1", "acov2", "acov3", "acov4", "acov5",
                    "cubic0", "cubic1", "cubic2", "cubic3", "b1", "b2"};
      break;
    case BaseMap::LorenzHakkarainen:
      base_names = {"mean", "var", "acov1", "cov_next", "xcov_prev_lag1", "xcov_next_lag1"};
      break;
    case BaseMap::ExternalMatrix:
      for (int j = 0; j < spec_.external_dimension; ++j) base_names.push_back("s" + std::to_string(j + 1));
      break;
  }
  SummaryVector probe{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(base_names.size())), base_names};
  switch (spec_.expansion) {
    case Expansion::None: names_ = base_names; break;
    case Expansion::Pairwise: names_ = expand_pairwise(probe).names; break;
    case Expansion::Square: names_ = cell_square_expand(probe).names; break;
  }
  for (int j = 0; j < spec_.noise_dims; ++j) names_.push_back("noise" + std::to_string(j + 1));
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (names_[j] == "const" || names_[j] == "x^0") {
      constant_column_ = static_cast<Eigen::Index>(j);
      break;
    }
  }
}

SummaryVector SummaryMap::base_vector(const Dataset& x) const {
  switch (spec_.base) {
    case BaseMap::GaussianPoly: return polynomial_summaries(x(0, 0), spec_.degree);
    case BaseMap::Arch: return arch_summaries(x.row(0).transpose());
    case BaseMap::RickerWood: return ricker_wood_summaries(x.row(0).transpose(), reference_->row(0).transpose());
    case BaseMap::LorenzHakkarainen: return lorenz_hakkarainen_summaries(x);
    case BaseMap::ExternalMatrix: {
      if (x.size() != spec_.external_dimension) throw ConfigError("external summary row has the wrong dimension");
      SummaryVector v;
      v.values = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
      return v;
    }
  }
  throw ConfigError("unknown summary map");
}

Eigen::VectorXd SummaryMap::operator()(const Dataset& x, Rng* noise) const {
  SummaryVector phi = base_vector(x);
  Eigen::VectorXd core;
  switch (spec_.expansion) {
    case Expansion::None: core = std::move(phi.values); break;
    case Expansion::Pairwise: core = expand_pairwise(phi).values; break;
    case Expansion::Square: core = cell_square_expand(phi).values; break;
  }
  if (spec_.noise_dims == 0) return core;
  if (noise == nullptr) throw ConfigError("summary map with noise_dims > 0 needs a noise generator");
  Eigen::VectorXd out(core.size() + spec_.noise_dims);
  out.head(core.size()) = core;
  for (int j = 0; j < spec_.noise_dims; ++j) out[core.size() + j] = noise->normal();
  return out;
}

Eigen::VectorXd SummaryMap::raw_statistics(const Dataset& x) const {
  switch (spec_.base) {
    case BaseMap::Arch: {
      Eigen::VectorXd rho(5);
      for (int lag = 1; lag <= 5; ++lag) rho[lag - 1] = autocorrelation(x.row(0).transpose(), lag);
      return rho;
    }
    case BaseMap::GaussianPoly: return Eigen::VectorXd::Constant(1, x(0, 0));
    default: return base_vector(x).values;
  }
}

Eigen::Index SummaryMap::raw_dimension() const {
  switch (spec_.base) {
    case BaseMap::GaussianPoly: return 1;
    case BaseMap::Arch: return 5;
    case BaseMap::RickerWood: return 13;
    case BaseMap::LorenzHakkarainen: return 6;
    case BaseMap::ExternalMatrix: return spec_.external_dimension;
  }
  return 0;
}

}  // namespace lfire
