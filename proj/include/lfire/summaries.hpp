#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lfire/rng.hpp"
#include "lfire/simulators.hpp"

namespace lfire {

struct SummaryVector {
  Eigen::VectorXd values;
  std::vector<std::string> names;

  [[nodiscard]] Eigen::Index size() const { return values.size(); }
};

enum class BaseMap { GaussianPoly, Arch, RickerWood, LorenzHakkarainen, ExternalMatrix };
enum class Expansion { None, Pairwise, Square };

struct SummaryMapSpec {
  BaseMap base = BaseMap::GaussianPoly;
  Expansion expansion = Expansion::None;
  int noise_dims = 0;
  /// Polynomial degree for GaussianPoly.
  int degree = 9;
  /// Column count for ExternalMatrix.
  int external_dimension = 0;
};

std::string to_string(BaseMap base);
BaseMap base_map_from_string(const std::string& name);
std::string to_string(Expansion e);
Expansion expansion_from_string(const std::string& name);

// Individual statistics --------------------------------------------------------

/// Sample autocorrelation at `lag`; lag 0 gives 1. Throws DegenerateInput for
/// a zero-variance series.
double autocorrelation(const Eigen::Ref<const Eigen::VectorXd>& series, int lag);
/// Autocovariance with divisor n (not n - lag).
double autocovariance(const Eigen::Ref<const Eigen::VectorXd>& series, int lag);

/// (rho_1..rho_5, pairwise rho products k >= k', mean, variance, 1): 23 entries.
SummaryVector arch_summaries(const Eigen::Ref<const Eigen::VectorXd>& series);
/// Wood's 13 Ricker statistics; `observed` supplies the regressor of the
/// cubic ordered-difference regression.
SummaryVector ricker_wood_summaries(const Eigen::Ref<const Eigen::VectorXd>& series,
                                    const Eigen::Ref<const Eigen::VectorXd>& observed);
/// Six site-averaged (co)variance statistics of a K x (T+1) trajectory.
SummaryVector lorenz_hakkarainen_summaries(const Eigen::MatrixXd& traj);

SummaryVector polynomial_summaries(double x, int degree);
/// (phi, phi_k phi_k' for k >= k' in row-major lower-triangular order, 1).
SummaryVector expand_pairwise(const SummaryVector& phi);
/// (phi, phi^2, 1).
SummaryVector cell_square_expand(const SummaryVector& phi);

// Composite map ------------------------------------------------------------------

/// A summary map psi bound to an optional reference (observed) dataset.
/// The same instance maps every simulated and observed dataset, so the
/// dimension and name order are fixed per instance.
class SummaryMap {
 public:
  SummaryMap(SummaryMapSpec spec, std::optional<Dataset> reference = std::nullopt);

  [[nodiscard]] const SummaryMapSpec& spec() const { return spec_; }
  [[nodiscard]] Eigen::Index dimension() const { return static_cast<Eigen::Index>(names_.size()); }
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
  /// Index of the constant-1 statistic, if the map has one.
  [[nodiscard]] std::optional<Eigen::Index> constant_column() const { return constant_column_; }
  /// True when psi depends on the reference dataset.
  [[nodiscard]] bool uses_reference() const { return spec_.base == BaseMap::RickerWood; }

  /// psi(x). `noise` supplies the white-noise columns and must be given when
  /// noise_dims > 0.
  [[nodiscard]] Eigen::VectorXd operator()(const Dataset& x, Rng* noise = nullptr) const;

  /// Raw statistics phi used by synthetic likelihood and rejection ABC:
  /// x for Gaussian, the five autocorrelations for ARCH, the 13 Wood
  /// statistics for Ricker and the six Hakkarainen statistics for Lorenz.
  [[nodiscard]] Eigen::VectorXd raw_statistics(const Dataset& x) const;
  [[nodiscard]] Eigen::Index raw_dimension() const;
  /// The base statistics before expansion and noise columns (rejection ABC).
  [[nodiscard]] Eigen::VectorXd base_statistics(const Dataset& x) const { return base_vector(x).values; }

 private:
  [[nodiscard]] SummaryVector base_vector(const Dataset& x) const;

  SummaryMapSpec spec_;
  std::optional<Dataset> reference_;
  std::vector<std::string> names_;
  std::optional<Eigen::Index> constant_column_;
};

}  // namespace lfire
