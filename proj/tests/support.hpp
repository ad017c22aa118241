#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qsbrown/catalog.hpp"
#include "qsbrown/linalg.hpp"
#include "qsbrown/model.hpp"

namespace qsb::testing {

/// Random spec satisfying the skew-symmetry relations by construction.
///
/// r is banded with unit diagonal; the spacing covariance Theta of
/// (x_1, y_1, ..., y_{n-1}) is then fixed by r, and a = N Theta N^T where
/// X_{k+1} = X_k - Y_k.
inline ModelSpec random_valid_spec(std::mt19937_64& gen, int K, int d) {
  std::uniform_real_distribution<double> sub(0.2, 0.6);
  std::uniform_real_distribution<double> small(-0.05, 0.05);
  std::uniform_real_distribution<double> drift(-1.0, 1.0);
  const int n = K + d + 1;

  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (auto& row : rows) {
    row[0] = 1.0;
    if (d > 1) row[1] = sub(gen);
    for (int j = 2; j < d; ++j) row[static_cast<std::size_t>(j)] = small(gen);
  }
  auto r = [&](int l, int k) {
    const int j = l - k;
    if (j < 0 || j >= d || k > n) return 0.0;
    return rows[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j)];
  };

  Eigen::MatrixXd th = Eigen::MatrixXd::Zero(n, n);
  th(0, 0) = 2.0;
  for (int k = 1; k < n; ++k) {
    th(0, k) = th(k, 0) = r(k, 1) / 2.0;
    th(k, k) = 1.0;
    for (int l = k + 1; l < n; ++l) th(k, l) = th(l, k) = (r(l, k) - r(l, k + 1)) / 2.0;
  }
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    N(i, 0) = 1.0;
    for (int j = 1; j <= i; ++j) N(i, j) = -1.0;
  }
  const Eigen::MatrixXd a = N * th * N.transpose();

  ModelSpec s;
  s.K = K;
  s.d = d;
  s.covariance = Covariance::dense(a);
  s.interaction = Interaction::banded(rows);
  std::vector<double> mus(static_cast<std::size_t>(K + d));
  for (auto& m : mus) m = drift(gen);
  s.drifts = Drifts{mus, static_cast<int>(mus.size())};
  s.potential = Potential::oconnell_yor(2.0);
  return s;
}

/// True when the random spacing covariance is positive definite.
inline bool theta_positive_definite(const ModelSpec& spec) {
  Eigen::LLT<Eigen::MatrixXd> llt(theta(spec, spec.K));
  return llt.info() == Eigen::Success;
}

/// nu from a dense LU solve of the M x M truncation of R~ nu = (mu_{k+1} - mu_k).
/// Exact once M >= k0 - 1, where the right-hand side and nu vanish.
inline Eigen::VectorXd nu_by_lu(const ModelSpec& spec, int M) {
  Eigen::MatrixXd m(M, M);
  Eigen::VectorXd b(M);
  for (int k = 1; k <= M; ++k) {
    b(k - 1) = spec.mu(k + 1) - spec.mu(k);
    for (int l = 1; l <= M; ++l) m(k - 1, l - 1) = r_tilde(spec, k, l);
  }
  return m.partialPivLu().solve(b);
}

}  // namespace qsb::testing
