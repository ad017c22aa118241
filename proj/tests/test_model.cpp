#include <doctest.h>

#include <random>

#include "qsbrown/catalog.hpp"
#include "qsbrown/errors.hpp"
#include "qsbrown/linalg.hpp"
#include "qsbrown/model.hpp"
#include "qsbrown/model_json.hpp"
#include "support.hpp"

using namespace qsb;

namespace {

ModelSpec perturbed_a11(const ModelSpec& base, double eps) {
  const int n = base.K + base.d + 1;
  Eigen::MatrixXd a = covariance_window(base, n);
  a(0, 0) += eps;
  ModelSpec s = base;
  s.covariance = Covariance::dense(a);
  return s;
}

bool has_failure(const ValidationReport& r, const std::string& condition) {
  for (const auto& e : r.failures())
    if (e.condition == condition) return true;
  return false;
}

}  // namespace

TEST_CASE("identity covariance and delta interaction") {
  const auto c = Covariance::identity_half();
  CHECK(c(1, 1) == 0.5);
  CHECK(c(3, 4) == 0.0);
  const auto r = Interaction::delta();
  CHECK(r(2, 2, 1) == 1.0);
  CHECK(r(3, 2, 1) == 0.0);
}

TEST_CASE("banded interaction is zero outside the band") {
  const auto r = Interaction::banded({{1.0, 0.3}, {1.0, 0.4}, {1.0, 0.5}});
  CHECK(r(1, 1, 2) == 1.0);
  CHECK(r(2, 1, 2) == doctest::Approx(0.3));
  CHECK(r(3, 2, 2) == doctest::Approx(0.4));
  CHECK(r(3, 1, 2) == 0.0);
  CHECK(r(1, 2, 2) == 0.0);
  CHECK_THROWS_AS(r(5, 4, 2), IndexUnavailable);
}

TEST_CASE("finite tables throw past their extent") {
  const auto c = Covariance::dense(Eigen::MatrixXd::Identity(3, 3) * 0.5);
  CHECK(c(3, 3) == 0.5);
  CHECK_THROWS_AS(c(4, 1), IndexUnavailable);
}

TEST_CASE("drifts are constant after k0") {
  const Drifts mu{{2.0, 1.0}, 2};
  CHECK(mu(1) == 2.0);
  CHECK(mu(2) == 1.0);
  CHECK(mu(50) == 1.0);
}

TEST_CASE("presets pass skew symmetry") {
  CHECK(validate_skew_symmetry(preset_oconnell_yor(2.0, 10)).pass());
  CHECK(validate_skew_symmetry(preset_beta_tasep(6.0, 1.0, 10)).pass());
  CHECK(validate_skew_symmetry(preset_free(3)).pass());
}

TEST_CASE("perturbing a_11 breaks the first-row relation") {
  const auto bad = validate_skew_symmetry(perturbed_a11(preset_oconnell_yor(2.0, 4), 1e-3));
  CHECK_FALSE(bad.pass());
  CHECK(has_failure(bad, "first_row"));
  // The relations are checked to tolerance, not exactly.
  CHECK(validate_skew_symmetry(perturbed_a11(preset_oconnell_yor(2.0, 4), 1e-11)).pass());
}

TEST_CASE("a broken diagonal of A~ is reported") {
  ModelSpec s = preset_oconnell_yor(2.0, 3);
  Eigen::MatrixXd a = covariance_window(s, 5);
  a(2, 2) = 0.7;
  s.covariance = Covariance::dense(a);
  const auto r = validate_skew_symmetry(s);
  CHECK(has_failure(r, "a_tilde_diagonal"));
}

TEST_CASE("non positive definite covariance is reported") {
  ModelSpec s = preset_oconnell_yor(2.0, 2);
  Eigen::MatrixXd a(3, 3);
  a << 0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.5;
  s.covariance = Covariance::dense(a);
  const auto r = validate_skew_symmetry(s);
  CHECK(has_failure(r, "positive_definite"));
}

TEST_CASE("random constructed specs pass skew symmetry") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 2 + trial % 6;
    const int d = 1 + trial % 4;
    const auto s = testing::random_valid_spec(gen, K, d);
    REQUIRE(testing::theta_positive_definite(s));
    const auto r = validate_skew_symmetry(s);
    CHECK(r.pass());
  }
}

TEST_CASE("measure conditions for presets") {
  const auto oy = preset_oconnell_yor(2.0, 4);
  const auto r = validate_measure_conditions(oy, solve_nu(oy));
  CHECK(r.pass());
  const auto bt = preset_beta_tasep(6.0, 1.0, 4);
  CHECK(validate_measure_conditions(bt, solve_nu(bt)).pass());
}

TEST_CASE("free preset fails the measure conditions") {
  const auto s = preset_free(2);
  CHECK_THROWS_AS(validate_measure_conditions(s, solve_nu(s)), DivergentIntegral);
}

TEST_CASE("model JSON round trip keeps the hash") {
  std::mt19937_64 gen(3);
  const auto s = testing::random_valid_spec(gen, 5, 3);
  const auto j = to_json(s);
  const auto back = model_from_json(j);
  CHECK(spec_hash(back) == spec_hash(s));
  CHECK(to_json(back) == j);
  for (int k = 1; k <= 8; ++k) {
    CHECK(back.mu(k) == s.mu(k));
    for (int l = 1; l <= 8; ++l) CHECK(back.a(k, l) == s.a(k, l));
  }
  CHECK(model_from_json(to_json(preset_beta_tasep(6.0, 1.0, 3))).potential.derivative(4.0) ==
        doctest::Approx(1.0 / 4.0 - 0.5));
}

TEST_CASE("spec hash distinguishes models") {
  CHECK(spec_hash(preset_oconnell_yor(2.0, 3)) != spec_hash(preset_oconnell_yor(2.0, 4)));
  CHECK(spec_hash(preset_oconnell_yor(2.0, 3)) != spec_hash(preset_oconnell_yor(3.0, 3)));
  CHECK(spec_hash(preset_oconnell_yor(2.0, 3)) == spec_hash(preset_oconnell_yor(2.0, 3)));
}

TEST_CASE("structural errors") {
  ModelSpec s;
  s.K = 0;
  CHECK_THROWS_AS(s.check_structure(), ConfigError);
  CHECK_THROWS_AS(model_from_json(nlohmann::json{{"K", 2}}), ConfigError);
}
