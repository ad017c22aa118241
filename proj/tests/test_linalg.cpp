#include <doctest.h>

#include <random>

#include "qsbrown/catalog.hpp"
#include "qsbrown/errors.hpp"
#include "qsbrown/linalg.hpp"
#include "support.hpp"

using namespace qsb;

TEST_CASE("constant drifts give nu = 0") {
  for (const auto& s : {preset_oconnell_yor(2.0, 10), preset_beta_tasep(6.0, 1.0, 7), preset_free(3)}) {
    const auto nu = solve_nu(s);
    CHECK(nu.size() == s.K + s.d - 1);
    for (double v : nu.values) CHECK(v == 0.0);
    CHECK(nu.residual == 0.0);
  }
}

TEST_CASE("d = 1 delta interaction: band entries") {
  const auto s = preset_oconnell_yor(2.0, 5);
  CHECK(band_entry(s, 3, 3) == doctest::Approx(1.0));
  // 2 a~_{k,k+1} = -1 and R~_{k+1,k} = 0; below the diagonal the two cancel.
  CHECK(band_entry(s, 2, 3) == doctest::Approx(-1.0));
  CHECK(band_entry(s, 3, 2) == doctest::Approx(0.0));
  CHECK(band_entry(s, 2, 4) == doctest::Approx(0.0));
  for (int k = 1; k <= 4; ++k)
    for (int l = 1; l <= 4; ++l) CHECK(band_entry(s, k, l) == doctest::Approx(r_tilde(s, k, l)));
}

TEST_CASE("d = 1 hand-solved system") {
  // nu_k - nu_{k+1} = mu_{k+1} - mu_k with nu = 0 from k0 on, so nu_k = mu_{k0} - mu_k.
  ModelSpec s = preset_oconnell_yor(2.0, 4);
  s.drifts = Drifts{{2.0, 1.5, 1.0}, 3};
  const auto nu = solve_nu(s);
  REQUIRE(nu.size() == 4);
  CHECK(nu(1) == doctest::Approx(-1.0));
  CHECK(nu(2) == doctest::Approx(-0.5));
  CHECK(nu(3) == 0.0);
  CHECK(nu(4) == 0.0);
}

TEST_CASE("drift variants with a single step") {
  ModelSpec s = preset_oconnell_yor(2.0, 8);
  s.drifts = Drifts{{0.0, 1.0}, 2};
  auto nu = solve_nu(s);
  CHECK(nu(1) == doctest::Approx(1.0));
  for (int k = 2; k <= nu.size(); ++k) CHECK(nu(k) == 0.0);
  s.drifts = Drifts{{2.0, 1.0}, 2};
  nu = solve_nu(s);
  CHECK(nu(1) == doctest::Approx(-1.0));
}

TEST_CASE("late drift changes reach back to nu_1") {
  ModelSpec s = preset_oconnell_yor(2.0, 2);
  s.drifts = Drifts{{0.0, 0.0, 0.0, 0.0, 1.0}, 5};
  const auto nu = solve_nu(s);
  REQUIRE(nu.size() == 2);
  CHECK(nu(1) == doctest::Approx(1.0));
  CHECK(nu(2) == doctest::Approx(1.0));
}

TEST_CASE("banded substitution matches dense LU on random specs") {
  std::mt19937_64 gen(20240611);
  std::uniform_int_distribution<int> kdist(1, 20);
  std::uniform_int_distribution<int> ddist(1, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = kdist(gen);
    const int d = ddist(gen);
    const auto s = testing::random_valid_spec(gen, K, d);
    REQUIRE(testing::theta_positive_definite(s));
    const int M = K + d - 1;
    const auto nu = solve_nu(s);
    const Eigen::VectorXd ref = testing::nu_by_lu(s, M);
    double err = 0.0;
    for (int k = 1; k <= M; ++k) err = std::max(err, std::abs(nu(k) - ref(k - 1)));
    CHECK(err < 1e-12);
    CHECK(nu.residual < 1e-12);
  }
}

TEST_CASE("explicit truncation size") {
  std::mt19937_64 gen(5);
  const auto s = testing::random_valid_spec(gen, 3, 2);
  const auto short_nu = solve_nu(s, 4);
  const auto long_nu = solve_nu(s, 5);
  CHECK(long_nu.size() == 5);
  for (int k = 1; k <= 4; ++k) CHECK(short_nu(k) == long_nu(k));
  CHECK_THROWS_AS(solve_nu(s, 3), ConfigError);
  CHECK_THROWS_AS(solve_nu(s, 9), IndexUnavailable);
}

TEST_CASE("non-unit diagonal is rejected") {
  ModelSpec s = preset_oconnell_yor(2.0, 3);
  Eigen::MatrixXd a = covariance_window(s, 5);
  a(1, 1) = 0.9;
  s.covariance = Covariance::dense(a);
  CHECK_THROWS_AS(solve_nu(s), DiagonalNotUnit);
}

TEST_CASE("a_tilde outside the window") {
  const auto s = preset_oconnell_yor(2.0, 3);
  CHECK(a_tilde(s, 3, 3) == doctest::Approx(1.0));
  CHECK_THROWS_AS(a_tilde(s, 4, 1), IndexUnavailable);
}

TEST_CASE("cholesky") {
  Eigen::MatrixXd a(3, 3);
  a << 4, 2, 0, 2, 5, 1, 0, 1, 3;
  const auto c = cholesky(a);
  CHECK((c.lower * c.lower.transpose() - a).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(c.lower(0, 1) == 0.0);
  CHECK_FALSE(c.is_diagonal());
  CHECK(cholesky(preset_oconnell_yor(2.0, 4)).is_diagonal());
  CHECK(cholesky(preset_oconnell_yor(2.0, 4)).lower(2, 2) == doctest::Approx(std::sqrt(0.5)));

  Eigen::MatrixXd bad(3, 3);
  bad << 1, 0, 0, 0, 1, 2, 0, 2, 1;
  try {
    cholesky(bad);
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.pivot() == 3);
  }
}

TEST_CASE("theta of the identity covariance") {
  const auto t = theta(preset_oconnell_yor(2.0, 3), 3);
  Eigen::MatrixXd expect(3, 3);
  expect << 0.5, 0.5, 0.0, 0.5, 1.0, -0.5, 0.0, -0.5, 1.0;
  CHECK((t - expect).cwiseAbs().maxCoeff() < 1e-15);
}
