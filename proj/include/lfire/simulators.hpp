#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lfire/rng.hpp"

namespace lfire {

/// One simulated or observed dataset, stored variables x time. Scalar models
/// use a 1x1 matrix, univariate series a 1xT matrix, Lorenz a Kx(T+1) matrix.
using Dataset = Eigen::MatrixXd;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Axis-aligned uniform prior.
struct PriorBox {
  std::vector<Interval> bounds;

  [[nodiscard]] std::size_t dimension() const { return bounds.size(); }
  [[nodiscard]] bool contains(const Eigen::VectorXd& theta) const;
  /// Log density; -infinity outside the box. Degenerate axes contribute 0.
  [[nodiscard]] double log_density(const Eigen::VectorXd& theta) const;
};

struct GaussianModelSpec {
  double sigma_o = 3.0;
  double prior_lo = -20.0;
  double prior_hi = 20.0;
};

struct ArchModelSpec {
  int T = 100;
  Interval theta1_prior{-1.0, 1.0};
  Interval theta2_prior{0.0, 1.0};
};

struct RickerModelSpec {
  int T = 50;
  Interval log_r_prior{3.0, 5.0};
  Interval sigma_prior{0.0, 0.6};
  Interval phi_prior{5.0, 15.0};
};

struct LorenzModelSpec {
  int K = 40;
  double F = 10.0;
  double dt = 0.025;
  int T = 160;
  double forcing_phi = 0.4;
  /// Empty means "use lorenz_default_initial_state(K, F, dt)".
  Eigen::VectorXd initial_state;
  Interval theta1_prior{0.5, 3.5};
  Interval theta2_prior{0.0, 0.3};
  /// false switches the stochastic forcing off (eta == 0).
  bool stochastic = true;
};

using SimulatorSpec = std::variant<GaussianModelSpec, ArchModelSpec, RickerModelSpec, LorenzModelSpec>;

/// Throws ConfigError when a spec violates its invariants.
void validate(const GaussianModelSpec& spec);
void validate(const ArchModelSpec& spec);
void validate(const RickerModelSpec& spec);
void validate(const LorenzModelSpec& spec);
void validate(const SimulatorSpec& spec);

double simulate_gaussian(const GaussianModelSpec& spec, double mu, Rng& rng);
Eigen::VectorXd simulate_arch(const ArchModelSpec& spec, double theta1, double theta2, Rng& rng);
Eigen::VectorXd simulate_ricker(const RickerModelSpec& spec, double log_r, double sigma, double phi, Rng& rng);
/// Returns the K x (T+1) trajectory including the initial state in column 0.
/// Throws Divergence when the state becomes non-finite.
Eigen::MatrixXd simulate_lorenz(const LorenzModelSpec& spec, double theta1, double theta2, Rng& rng);

/// Continues a Lorenz trajectory from `start` for `steps` steps. The forcing
/// process restarts from its stationary initialisation. Returns K x (steps+1).
Eigen::MatrixXd continue_lorenz(const LorenzModelSpec& spec, double theta1, double theta2,
                                const Eigen::VectorXd& start, int steps, Rng& rng);

/// Drift of the forecast model: -y[k-1](y[k-2]-y[k+1]) - y[k] + F - (theta1 + theta2 y[k]) + eta[k].
void lorenz_drift(const Eigen::VectorXd& y, double F, double theta1, double theta2, const Eigen::VectorXd& eta,
                  Eigen::VectorXd& out);
/// One classical RK4 step with eta held constant over the step.
void lorenz_rk4_step(Eigen::VectorXd& y, double F, double theta1, double theta2, const Eigen::VectorXd& eta,
                     double dt);

/// Deterministic on-attractor start: the uniform fixed point of the
/// deterministic forecast model at theta = (2.0, 0.15), perturbed in site 0
/// by 0.01 and integrated for 1000 RK4 steps.
Eigen::VectorXd lorenz_default_initial_state(int K, double F, double dt);

/// Simulation dispatch on the spec variant; theta is in the spec's parameter order.
Dataset simulate(const SimulatorSpec& spec, const Eigen::VectorXd& theta, Rng& rng);

/// Copy of the spec with an empty Lorenz initial state replaced by the default.
SimulatorSpec resolved(SimulatorSpec spec);

PriorBox prior_of(const SimulatorSpec& spec);
std::vector<std::string> parameter_names(const SimulatorSpec& spec);
std::string model_name(const SimulatorSpec& spec);

/// n independent draws from the box, one per row.
Eigen::MatrixXd sample_prior(const PriorBox& prior, int n, Rng& rng);

}  // namespace lfire
