#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qsbrown/catalog.hpp"
#include "qsbrown/errors.hpp"
#include "qsbrown/linalg.hpp"
#include "qsbrown/measure.hpp"
#include "qsbrown/random.hpp"
#include "qsbrown/stats.hpp"

using namespace qsb;

namespace {

constexpr double kEuler = 0.57721566490153286;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("O'Connell-Yor spacing law is log-Gamma") {
  struct Case { double mu, Z, mean, var; };
  const double pi2_6 = std::numbers::pi * std::numbers::pi / 6.0;
  for (const auto& c : {Case{1.0, 1.0, kEuler, pi2_6},
                        Case{2.0, 1.0, kEuler - 1.0, pi2_6 - 1.0},
                        Case{3.0, 2.0, kEuler - 1.5, pi2_6 - 1.25}}) {
    const auto m = build_measure(Potential::oconnell_yor(c.mu), 0.0);
    CHECK(rel(m.partition(), c.Z) < 1e-8);
    CHECK(m.mean() == doctest::Approx(c.mean).epsilon(1e-8));
    CHECK(m.variance() == doctest::Approx(c.var).epsilon(1e-8));
    CHECK(m.fisher() == doctest::Approx(c.mu).epsilon(1e-8));
    CHECK(m.fisher_alt() == doctest::Approx(c.mu).epsilon(1e-8));
    CHECK(m.table_mass() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("beta-TASEP spacing law is Gamma(beta/2, mu)") {
  struct Case { double beta, mu, Z, mean, var, fisher; };
  for (const auto& c : {Case{6.0, 1.0, 2.0, 3.0, 3.0, 1.0}, Case{8.0, 2.0, 0.375, 2.0, 1.0, 2.0},
                        Case{4.5, 1.0, std::tgamma(2.25), 2.25, 2.25, 4.0}}) {
    const auto m = build_measure(Potential::beta_tasep(c.beta, c.mu), 0.0);
    CHECK(m.support() == Support::PositiveHalfLine);
    CHECK(rel(m.partition(), c.Z) < 1e-8);
    CHECK(m.mean() == doctest::Approx(c.mean).epsilon(1e-8));
    CHECK(m.variance() == doctest::Approx(c.var).epsilon(1e-8));
    CHECK(m.fisher() == doctest::Approx(c.fisher).epsilon(1e-6));
    CHECK(m.fisher_alt() == doctest::Approx(c.fisher).epsilon(1e-6));
  }
}

TEST_CASE("nu tilts the law") {
  // exp(2U - 2 nu z) for O'Connell-Yor(mu) is log-Gamma(mu + 2 nu).
  const auto m = build_measure(Potential::oconnell_yor(1.0), 0.5, 3);
  CHECK(m.index() == 3);
  CHECK(m.nu() == 0.5);
  CHECK(rel(m.partition(), 1.0) < 1e-8);
  CHECK(m.mean() == doctest::Approx(kEuler - 1.0).epsilon(1e-8));
}

TEST_CASE("Fisher information must be finite") {
  CHECK_THROWS_AS(build_measure(Potential::beta_tasep(4.0, 1.0), 0.0), DivergentIntegral);
  CHECK_THROWS_AS(build_measure(Potential::beta_tasep(3.5, 1.0), 0.0), DivergentIntegral);
  try {
    build_measure(Potential::beta_tasep(4.0, 1.0), 0.0, 2);
    FAIL("expected DivergentIntegral");
  } catch (const DivergentIntegral& e) {
    CHECK(e.index() == 2);
    CHECK(e.which() == "fisher");
  }
}

TEST_CASE("non-normalizable laws are rejected") {
  try {
    build_measure(Potential::zero(), 0.0);
    FAIL("expected DivergentIntegral");
  } catch (const DivergentIntegral& e) {
    CHECK(e.which() == "Z");
  }
  // A tilt that overwhelms the confinement: e^{-(mu + 2 nu) z} with mu + 2 nu < 0.
  CHECK_THROWS_AS(build_measure(Potential::oconnell_yor(1.0), -1.0), DivergentIntegral);
}

TEST_CASE("CDF against closed forms") {
  const auto oy = build_measure(Potential::oconnell_yor(1.0), 0.0);
  for (double z : {-2.0, -0.5, 0.0, 0.7, 3.0})
    CHECK(oy.cdf(z) == doctest::Approx(std::exp(-std::exp(-z))).epsilon(1e-9));
  const auto g = build_measure(Potential::beta_tasep(6.0, 1.0), 0.0);
  for (double z : {0.01, 0.5, 2.0, 3.0, 9.0})
    CHECK(g.cdf(z) == doctest::Approx(1.0 - std::exp(-z) * (1.0 + z + z * z / 2.0)).epsilon(1e-9));
  CHECK(g.cdf(-1.0) == 0.0);
  CHECK(g.density(-1.0) == 0.0);
  CHECK(g.density(2.0) == doctest::Approx(2.0 * std::exp(-2.0))); // z^2 e^{-z} / 2
}

TEST_CASE("quantile inverts the CDF") {
  const auto g = build_measure(Potential::beta_tasep(6.0, 1.0), 0.0);
  for (double u : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999999}) {
    const double z = g.quantile(u);
    CHECK(g.cdf(z) == doctest::Approx(u).epsilon(2e-6));
  }
}

TEST_CASE("spacing draws pass a KS test") {
  for (const auto& p : {Potential::oconnell_yor(2.0), Potential::beta_tasep(6.0, 1.0)}) {
    const auto m = build_measure(p, 0.0);
    RandomStream rng(11, 0);
    std::vector<double> xs(50000);
    for (auto& x : xs) x = sample_spacing(m, rng);
    const double D = ks_statistic(xs, [&](double z) { return m.cdf(z); });
    CHECK(D < ks_critical_one_sample(xs.size()));
    const auto mom = moments(xs);
    CHECK(std::abs(mom.mean - m.mean()) < 4.0 * mom.mean_se());
  }
}

TEST_CASE("quasi-stationary law pins X_1 and orders particles") {
  const auto spec = preset_beta_tasep(6.0, 1.0, 5);
  const QuasiStationaryLaw law(spec, solve_nu(spec));
  CHECK(law.K() == 5);
  RandomStream rng(3, 0);
  for (int i = 0; i < 100; ++i) {
    const auto x = law.sample(rng);
    REQUIRE(x.size() == 5);
    CHECK(x[0] == 0.0);
    for (std::size_t k = 0; k + 1 < x.size(); ++k) CHECK(x[k] > x[k + 1]);
  }
  const QuasiStationaryLaw one(spec.with_K(1), solve_nu(spec));
  CHECK(one.sample(rng) == std::vector<double>{0.0});
}
