#pragma once

#include <functional>
#include <span>
#include <vector>

namespace qsb {

/// Asymptotic Kolmogorov critical value c(0.01).
inline constexpr double kKsCritical01 = 1.628;

struct SampleMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;         // unbiased
  double fourth_central = 0.0;   // m4 about the sample mean

  /// Standard error of the mean.
  double mean_se() const;
  /// Standard error of the sample variance, sqrt((m4 - s^4) / n).
  double variance_se() const;
};

SampleMoments moments(std::span<const double> xs);

/// sup |F_n - F| for a continuous reference CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

/// sup |F_n - G_m| between two empirical distributions.
double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b);

/// c(alpha) / sqrt(n) and c(alpha) sqrt((n+m)/(nm)).
double ks_critical_one_sample(std::size_t n, double c_alpha = kKsCritical01);
double ks_critical_two_sample(std::size_t n, std::size_t m, double c_alpha = kKsCritical01);

/// P(sup |B| > lambda) for the Brownian bridge (Kolmogorov distribution tail).
double kolmogorov_survival(double lambda);

}  // namespace qsb
