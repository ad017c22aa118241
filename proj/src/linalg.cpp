#include "qsbrown/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "qsbrown/errors.hpp"

namespace qsb {

double a_tilde(const ModelSpec& spec, int k, int l) {
  const int n = spec.K + spec.d - 1;
  if (k < 1 || l < 1 || k > n || l > n) throw IndexUnavailable("a_tilde", k, l);
  return spec.a(k, l) + spec.a(k + 1, l + 1) - spec.a(k + 1, l) - spec.a(k, l + 1);
}

double r_tilde(const ModelSpec& spec, int k, int l) { return spec.r(l, k) - spec.r(l, k + 1); }

double band_entry(const ModelSpec& spec, int k, int l) {
  return 2.0 * (spec.a(k, l) + spec.a(k + 1, l + 1) - spec.a(k + 1, l) - spec.a(k, l + 1)) -
         r_tilde(spec, l, k);
}

NuVector solve_nu(const ModelSpec& spec) { return solve_nu(spec, spec.K + spec.d - 1); }

NuVector solve_nu(const ModelSpec& spec, int M) {
  spec.check_structure();
  if (M < spec.K + spec.d - 1) throw ConfigError("solve_nu: M must be >= K+d-1");

  // mu is constant from k0 on, so the right-hand side vanishes there and the
  // tail of nu is zero. Only the first W unknowns need substitution.
  const int W = std::max(M, spec.drifts.k0 - 1);
  std::vector<double> v(static_cast<std::size_t>(W), 0.0);
  for (int k = W; k >= 1; --k) {
    const double diag = band_entry(spec, k, k);
    if (std::abs(diag - 1.0) > 1e-9) throw DiagonalNotUnit(k, diag);
    double acc = spec.mu(k + 1) - spec.mu(k);
    for (int l = k + 1; l <= std::min(W, k + spec.d); ++l)
      acc -= band_entry(spec, k, l) * v[static_cast<std::size_t>(l - 1)];
    v[static_cast<std::size_t>(k - 1)] = acc / diag;
  }

  // Full W x W residual: catches a spec whose matrix is not upper triangular.
  double residual = 0.0;
  double scale = 1.0;
  for (int k = 1; k <= W; ++k) {
    const double b = spec.mu(k + 1) - spec.mu(k);
    double row = -b;
    for (int l = 1; l <= W; ++l) row += band_entry(spec, k, l) * v[static_cast<std::size_t>(l - 1)];
    residual = std::max(residual, std::abs(row));
    scale = std::max(scale, std::abs(b));
  }
  if (residual > 1e-10 * scale) throw ResidualCheckFailed(residual);
  NuVector nu;
  nu.values.assign(v.begin(), v.begin() + M);
  nu.residual = residual;
  return nu;
}

Eigen::MatrixXd covariance_window(const ModelSpec& spec, int n) {
  Eigen::MatrixXd a(n, n);
  for (int k = 1; k <= n; ++k)
    for (int l = 1; l <= n; ++l) a(k - 1, l - 1) = spec.a(k, l);
  return a;
}

bool CholeskyFactor::is_diagonal() const {
  for (Eigen::Index i = 0; i < lower.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (lower(i, j) != 0.0) return false;
  return true;
}

CholeskyFactor cholesky(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  CholeskyFactor f;
  f.lower = Eigen::MatrixXd::Zero(n, n);
  auto& L = f.lower;
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (Eigen::Index p = 0; p < j; ++p) pivot -= L(j, p) * L(j, p);
    // Pivots lost to cancellation count as zero.
    if (!(pivot > 1e-13 * std::abs(a(j, j)))) throw NotPositiveDefinite(static_cast<int>(j + 1));
    const double root = std::sqrt(pivot);
    L(j, j) = root;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index p = 0; p < j; ++p) s -= L(i, p) * L(j, p);
      L(i, j) = s / root;
    }
  }
  return f;
}

CholeskyFactor cholesky(const ModelSpec& spec) { return cholesky(covariance_window(spec, spec.K)); }

Eigen::MatrixXd theta(const ModelSpec& spec, int n) {
  if (n < 1 || n > spec.K) throw IndexUnavailable("theta", n, n);
  Eigen::MatrixXd t(n, n);
  for (int k = 1; k <= n; ++k) {
    for (int l = 1; l <= n; ++l) {
      double v;
      if (k == 1 && l == 1) v = spec.a(1, 1);
      else if (k == 1) v = spec.a(1, l - 1) - spec.a(1, l);
      else if (l == 1) v = spec.a(k - 1, 1) - spec.a(k, 1);
      else v = spec.a(k - 1, l - 1) + spec.a(k, l) - spec.a(k, l - 1) - spec.a(k - 1, l);
      t(k - 1, l - 1) = v;
    }
  }
  return t;
}

}  // namespace qsb
