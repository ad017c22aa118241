#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qsbrown/model.hpp"

namespace qsb {

/// Drift constants nu_1..nu_M of the quasi-stationary spacing laws.
///
/// They solve sum_l m_{kl} nu_l = mu_{k+1} - mu_k with m_{kl} = 2 a~_{kl} - R~_{lk},
/// an upper triangular band matrix with unit diagonal, and nu_k = 0 once mu
/// is constant.
struct NuVector {
  std::vector<double> values;
  double residual = 0.0;  // max-norm residual of the truncated system

  int size() const { return static_cast<int>(values.size()); }
  double operator()(int k) const { return values.at(static_cast<std::size_t>(k - 1)); }
};

/// a_{kl} + a_{(k+1)(l+1)} - a_{(k+1)l} - a_{k(l+1)}.
double a_tilde(const ModelSpec& spec, int k, int l);

/// r_{lk} - r_{l(k+1)}, the (k,l) entry of R~.
double r_tilde(const ModelSpec& spec, int k, int l);

/// m_{kl} = 2 a~_{kl} - R~_{lk}. Upper triangular with band width d and unit
/// diagonal under the skew-symmetry assumption (where it equals R~).
double band_entry(const ModelSpec& spec, int k, int l);

/// Back substitution from max(M, k0-1) down to 1, then a residual check on
/// the full truncation. Returns nu_1..nu_M (default M = K+d-1).
NuVector solve_nu(const ModelSpec& spec, int M);
NuVector solve_nu(const ModelSpec& spec);

/// (a_kl)_{k,l<=n}.
Eigen::MatrixXd covariance_window(const ModelSpec& spec, int n);

struct CholeskyFactor {
  Eigen::MatrixXd lower;

  bool is_diagonal() const;
};

/// Dense Cholesky; throws NotPositiveDefinite with the 1-based failing pivot.
CholeskyFactor cholesky(const Eigen::MatrixXd& a);
CholeskyFactor cholesky(const ModelSpec& spec);

/// Covariance of (X_1, X_1 - X_2, ..., X_{n-1} - X_n) per unit time.
Eigen::MatrixXd theta(const ModelSpec& spec, int n);

}  // namespace qsb
