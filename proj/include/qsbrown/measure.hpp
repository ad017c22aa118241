#pragma once

#include <memory>
#include <vector>

#include "qsbrown/linalg.hpp"
#include "qsbrown/model.hpp"
#include "qsbrown/potential.hpp"
#include "qsbrown/random.hpp"

namespace qsb {

/// Spacing law with density exp(2U(z) - 2 nu z) / Z on the potential's support.
///
/// Built once by build_measure(); afterwards immutable. Moments come from
/// adaptive Simpson quadrature over a window holding all but ~1e-12 of the
/// mass; draws use a tabulated inverse CDF.
class SpacingMeasure {
 public:
  int index() const { return index_; }
  double nu() const { return nu_; }
  Support support() const { return potential_.support(); }

  double partition() const { return partition_; }
  double mean() const { return mean_; }
  double variance() const { return variance_; }
  /// Integral of p(z) (2U'(z) - 2 nu)^2.
  double fisher() const { return fisher_; }
  /// Same quantity expanded as 4 (E[U'^2] - 2 nu E[U'] + nu^2); the first
  /// term is the U'^2-weighted integral of the unnormalized kernel.
  double fisher_alt() const { return fisher_alt_; }
  /// Mass of the CDF mesh divided by Z (an independent quadrature pass).
  double table_mass() const { return table_mass_; }

  /// Window [lo, hi] outside of which the mass is negligible.
  double lo() const { return mesh_z_.front(); }
  double hi() const { return mesh_z_.back(); }

  double log_kernel(double z) const;  // 2U(z) - 2 nu z, -inf off support
  double density(double z) const;     // normalized
  double cdf(double z) const;

  /// Piecewise-linear inverse CDF on the quantile grid.
  double quantile(double u) const;
  const std::vector<double>& quantile_u() const { return quantile_u_; }
  const std::vector<double>& quantile_z() const { return quantile_z_; }

 private:
  friend SpacingMeasure build_measure(const Potential&, double, int);
  explicit SpacingMeasure(Potential potential) : potential_(std::move(potential)) {}

  double scaled_kernel(double z) const;  // exp(log_kernel - log_peak)
  double mesh_integral(std::size_t cell, double z) const;
  double invert(double u) const;
  void build_quantiles();

  Potential potential_;
  int index_ = 1;
  double nu_ = 0.0;
  double log_peak_ = 0.0;
  double scaled_mass_ = 0.0;  // integral of scaled_kernel over the window
  double partition_ = 0.0;
  double mean_ = 0.0;
  double variance_ = 0.0;
  double fisher_ = 0.0;
  double fisher_alt_ = 0.0;
  double table_mass_ = 0.0;
  bool graded_first_cell_ = false;

  std::vector<double> mesh_z_;
  std::vector<double> mesh_cdf_;  // normalized, mesh_cdf_.back() == 1
  double mesh_total_ = 0.0;       // scaled mass summed over mesh cells
  std::vector<double> quantile_u_;
  std::vector<double> quantile_z_;
  std::vector<std::uint32_t> guide_;
};

/// Throws DivergentIntegral (tail search failed) or NonIntegrableSingularity
/// (endpoint singularity) naming `which` of "Z", "second_moment", "fisher".
SpacingMeasure build_measure(const Potential& potential, double nu_k, int index = 1);

double sample_spacing(const SpacingMeasure& measure, RandomStream& rng);

/// Quasi-stationary initial law of a K-particle truncation: X_1 = 0 and
/// independent spacings X_k - X_{k+1} drawn from the k-th spacing measure.
class QuasiStationaryLaw {
 public:
  QuasiStationaryLaw(const ModelSpec& spec, const NuVector& nu);

  int K() const { return K_; }
  const SpacingMeasure& measure(int k) const { return *measures_.at(static_cast<std::size_t>(k - 1)); }

  std::vector<double> sample(RandomStream& rng) const;

 private:
  int K_;
  std::vector<std::shared_ptr<const SpacingMeasure>> measures_;  // k = 1..K-1
};

std::vector<double> sample_initial_condition(const QuasiStationaryLaw& law, RandomStream& rng);

}  // namespace qsb
