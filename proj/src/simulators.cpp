#include "lfire/simulators.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "lfire/error.hpp"

namespace lfire {

namespace {

void check_interval(const Interval& iv, const char* name) {
  if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
    throw ConfigError(std::string("prior interval for ") + name + " must be finite with lo <= hi");
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

bool PriorBox::contains(const Eigen::VectorXd& theta) const {
  if (static_cast<std::size_t>(theta.size()) != bounds.size()) return false;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (theta[static_cast<Eigen::Index>(i)] < bounds[i].lo || theta[static_cast<Eigen::Index>(i)] > bounds[i].hi) {
      return false;
    }
  }
  return true;
}

double PriorBox::log_density(const Eigen::VectorXd& theta) const {
  if (!contains(theta)) return -std::numeric_limits<double>::infinity();
  double lp = 0.0;
  for (const auto& b : bounds) {
    if (b.hi > b.lo) lp -= std::log(b.hi - b.lo);
  }
  return lp;
}

void validate(const GaussianModelSpec& spec) {
  if (!(spec.sigma_o > 0.0)) throw ConfigError("gaussian: sigma_o must be > 0");
  if (!(spec.prior_lo < spec.prior_hi)) throw ConfigError("gaussian: prior_lo must be < prior_hi");
}

void validate(const ArchModelSpec& spec) {
  if (spec.T < 2) throw ConfigError("arch: T must be >= 2");
  check_interval(spec.theta1_prior, "theta1");
  check_interval(spec.theta2_prior, "theta2");
}

void validate(const RickerModelSpec& spec) {
  if (spec.T < 1) throw ConfigError("ricker: T must be >= 1");
  check_interval(spec.log_r_prior, "log_r");
  check_interval(spec.sigma_prior, "sigma");
  check_interval(spec.phi_prior, "phi");
  if (spec.sigma_prior.lo < 0.0) throw ConfigError("ricker: sigma prior must be nonnegative");
  if (spec.phi_prior.lo < 0.0) throw ConfigError("ricker: phi prior must be nonnegative");
}

void validate(const LorenzModelSpec& spec) {
  if (spec.K < 4) throw ConfigError("lorenz: K must be >= 4");
  if (!(spec.dt > 0.0)) throw ConfigError("lorenz: dt must be > 0");
  if (spec.T < 1) throw ConfigError("lorenz: T must be >= 1");
  if (!(spec.forcing_phi >= 0.0 && spec.forcing_phi < 1.0)) throw ConfigError("lorenz: forcing_phi must be in [0, 1)");
  if (spec.initial_state.size() != 0 && spec.initial_state.size() != spec.K) {
    throw ConfigError("lorenz: initial_state must have K entries");
  }
  check_interval(spec.theta1_prior, "theta1");
  check_interval(spec.theta2_prior, "theta2");
}

void validate(const SimulatorSpec& spec) {
  std::visit([](const auto& s) { validate(s); }, spec);
}

double simulate_gaussian(const GaussianModelSpec& spec, double mu, Rng& rng) {
  return mu + spec.sigma_o * rng.normal();
}

Eigen::VectorXd simulate_arch(const ArchModelSpec& spec, double theta1, double theta2, Rng& rng) {
  Eigen::VectorXd y(spec.T);
  double e_prev = rng.normal();
  double y_prev = 0.0;
  for (int t = 0; t < spec.T; ++t) {
    const double e = rng.normal() * std::sqrt(0.2 + theta2 * e_prev * e_prev);
    y_prev = theta1 * y_prev + e;
    y[t] = y_prev;
    e_prev = e;
  }
  return y;
}

Eigen::VectorXd simulate_ricker(const RickerModelSpec& spec, double log_r, double sigma, double phi, Rng& rng) {
  Eigen::VectorXd y(spec.T);
  // log N(0) = 0, see README for the initial-condition convention.
  double log_n = 0.0;
  for (int t = 0; t < spec.T; ++t) {
    log_n = log_r + log_n - std::exp(log_n) + sigma * rng.normal();
    y[t] = static_cast<double>(rng.poisson(phi * std::exp(log_n)));
  }
  return y;
}

void lorenz_drift(const Eigen::VectorXd& y, double F, double theta1, double theta2, const Eigen::VectorXd& eta,
                  Eigen::VectorXd& out) {
  const Eigen::Index K = y.size();
  out.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const Eigen::Index km1 = (k + K - 1) % K;
    const Eigen::Index km2 = (k + K - 2) % K;
    const Eigen::Index kp1 = (k + 1) % K;
    out[k] = -y[km1] * (y[km2] - y[kp1]) - y[k] + F - (theta1 + theta2 * y[k]) + eta[k];
  }
}

void lorenz_rk4_step(Eigen::VectorXd& y, double F, double theta1, double theta2, const Eigen::VectorXd& eta,
                     double dt) {
  Eigen::VectorXd k1, k2, k3, k4;
  lorenz_drift(y, F, theta1, theta2, eta, k1);
  lorenz_drift(y + 0.5 * dt * k1, F, theta1, theta2, eta, k2);
  lorenz_drift(y + 0.5 * dt * k2, F, theta1, theta2, eta, k3);
  lorenz_drift(y + dt * k3, F, theta1, theta2, eta, k4);
  y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd lorenz_default_initial_state(int K, double F, double dt) {
  constexpr double theta1 = 2.0;
  constexpr double theta2 = 0.15;
  Eigen::VectorXd y = Eigen::VectorXd::Constant(K, (F - theta1) / (1.0 + theta2));
  y[0] += 0.01;
  const Eigen::VectorXd eta = Eigen::VectorXd::Zero(K);
  for (int s = 0; s < 1000; ++s) lorenz_rk4_step(y, F, theta1, theta2, eta, dt);
  return y;
}

namespace {

Eigen::MatrixXd integrate_lorenz(const LorenzModelSpec& spec, double theta1, double theta2,
                                 const Eigen::VectorXd& start, int steps, Rng& rng) {
  const int K = static_cast<int>(start.size());
  Eigen::MatrixXd traj(K, steps + 1);
  traj.col(0) = start;
  Eigen::VectorXd y = start;
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(K);
  const double phi = spec.forcing_phi;
  const double innov = std::sqrt(std::max(0.0, 1.0 - phi * phi));
  if (spec.stochastic) {
    for (int k = 0; k < K; ++k) eta[k] = innov * rng.normal();
  }
  for (int s = 0; s < steps; ++s) {
    lorenz_rk4_step(y, spec.F, theta1, theta2, eta, spec.dt);
    if (!y.allFinite()) {
      std::ostringstream msg;
      msg << "lorenz: non-finite state at step " << (s + 1);
      throw Divergence(msg.str(), s + 1);
    }
    traj.col(s + 1) = y;
    if (spec.stochastic) {
      for (int k = 0; k < K; ++k) eta[k] = phi * eta[k] + innov * rng.normal();
    }
  }
  return traj;
}

}  // namespace

Eigen::MatrixXd simulate_lorenz(const LorenzModelSpec& spec, double theta1, double theta2, Rng& rng) {
  const Eigen::VectorXd start = spec.initial_state.size() == spec.K
                                    ? spec.initial_state
                                    : lorenz_default_initial_state(spec.K, spec.F, spec.dt);
  return integrate_lorenz(spec, theta1, theta2, start, spec.T, rng);
}

Eigen::MatrixXd continue_lorenz(const LorenzModelSpec& spec, double theta1, double theta2,
                                const Eigen::VectorXd& start, int steps, Rng& rng) {
  return integrate_lorenz(spec, theta1, theta2, start, steps, rng);
}

Dataset simulate(const SimulatorSpec& spec, const Eigen::VectorXd& theta, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const GaussianModelSpec& s) -> Dataset {
            return Dataset::Constant(1, 1, simulate_gaussian(s, theta[0], rng));
          },
          [&](const ArchModelSpec& s) -> Dataset { return simulate_arch(s, theta[0], theta[1], rng).transpose(); },
          [&](const RickerModelSpec& s) -> Dataset {
            return simulate_ricker(s, theta[0], theta[1], theta[2], rng).transpose();
          },
          [&](const LorenzModelSpec& s) -> Dataset { return simulate_lorenz(s, theta[0], theta[1], rng); },
      },
      spec);
}

SimulatorSpec resolved(SimulatorSpec spec) {
  if (auto* lz = std::get_if<LorenzModelSpec>(&spec); lz && lz->initial_state.size() == 0) {
    lz->initial_state = lorenz_default_initial_state(lz->K, lz->F, lz->dt);
  }
  return spec;
}

PriorBox prior_of(const SimulatorSpec& spec) {
  return std::visit(Overloaded{
                        [](const GaussianModelSpec& s) { return PriorBox{{{s.prior_lo, s.prior_hi}}}; },
                        [](const ArchModelSpec& s) { return PriorBox{{s.theta1_prior, s.theta2_prior}}; },
                        [](const RickerModelSpec& s) {
                          return PriorBox{{s.log_r_prior, s.sigma_prior, s.phi_prior}};
                        },
                        [](const LorenzModelSpec& s) { return PriorBox{{s.theta1_prior, s.theta2_prior}}; },
                    },
                    spec);
}

std::vector<std::string> parameter_names(const SimulatorSpec& spec) {
  return std::visit(Overloaded{
                        [](const GaussianModelSpec&) { return std::vector<std::string>{"mu"}; },
                        [](const ArchModelSpec&) { return std::vector<std::string>{"theta1", "theta2"}; },
                        [](const RickerModelSpec&) { return std::vector<std::string>{"log_r", "sigma", "phi"}; },
                        [](const LorenzModelSpec&) { return std::vector<std::string>{"theta1", "theta2"}; },
                    },
                    spec);
}

std::string model_name(const SimulatorSpec& spec) {
  return std::visit(Overloaded{
                        [](const GaussianModelSpec&) { return std::string("gaussian"); },
                        [](const ArchModelSpec&) { return std::string("arch"); },
                        [](const RickerModelSpec&) { return std::string("ricker"); },
                        [](const LorenzModelSpec&) { return std::string("lorenz"); },
                    },
                    spec);
}

Eigen::MatrixXd sample_prior(const PriorBox& prior, int n, Rng& rng) {
  if (n < 1) throw ConfigError("sample_prior: n must be >= 1");
  const auto d = static_cast<Eigen::Index>(prior.dimension());
  Eigen::MatrixXd draws(n, d);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto& b = prior.bounds[static_cast<std::size_t>(j)];
      draws(i, j) = b.lo == b.hi ? b.lo : rng.uniform(b.lo, b.hi);
    }
  }
  return draws;
}

}  // namespace lfire
