#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "qsbrown/catalog.hpp"
#include "qsbrown/errors.hpp"
#include "qsbrown/linalg.hpp"
#include "qsbrown/measure.hpp"
#include "qsbrown/sde.hpp"
#include "qsbrown/stats.hpp"

using namespace qsb;

namespace {

InitialCondition stationary(const ModelSpec& spec, const NuVector& nu) {
  return InitialCondition::quasi_stationary(std::make_shared<const QuasiStationaryLaw>(spec, nu));
}

}  // namespace

TEST_CASE("drift of the O'Connell-Yor preset at zero spacing") {
  const auto spec = preset_oconnell_yor(2.0, 2);
  const auto b = drift(spec, solve_nu(spec), std::vector<double>{0.0, 0.0});
  // mu/2 + U'(0) = 1 - 1/2, i.e. (1/2) e^{-0}; the last particle only feels mu/2.
  CHECK(b[0] == doctest::Approx(0.5));
  CHECK(b[1] == doctest::Approx(1.0));
}

TEST_CASE("drift of the beta-TASEP preset") {
  const auto spec = preset_beta_tasep(6.0, 1.0, 2);
  const auto b = drift(spec, solve_nu(spec), std::vector<double>{0.0, -1.0});
  CHECK(b[0] == doctest::Approx(1.0));
  CHECK(b[1] == doctest::Approx(0.5));

  const auto spec8 = preset_beta_tasep(8.0, 2.0, 4);
  const std::vector<double> x = {0.3, -0.2, -2.0, -2.01};
  const auto c = drift(spec8, solve_nu(spec8), x);
  // mu_k = 1 cancels the linear part of U'(y) = 1.5/y - 1.
  for (std::size_t k = 0; k + 1 < x.size(); ++k)
    CHECK(std::abs(c[k] - 1.5 / (x[k] - x[k + 1])) < 1e-14 * std::abs(c[k]) + 1e-14);
  CHECK(c[3] == doctest::Approx(1.0));
}

TEST_CASE("drift of O'Connell-Yor equals mu/2 - mu/2 + e^{-y}/2 pattern") {
  const auto spec = preset_oconnell_yor(3.0, 3);
  const std::vector<double> x = {1.0, 1.4, -0.6};
  const auto b = drift(spec, solve_nu(spec), x);
  CHECK(b[0] == doctest::Approx(0.5 * std::exp(0.4)));
  CHECK(b[1] == doctest::Approx(0.5 * std::exp(-2.0)));
  CHECK(b[2] == doctest::Approx(1.5));
}

TEST_CASE("K = 1 drift is mu_1 + nu_1") {
  ModelSpec spec = preset_oconnell_yor(2.0, 1);
  spec.drifts = Drifts{{0.0, 1.0}, 2};
  const auto nu = solve_nu(spec);
  REQUIRE(nu(1) == doctest::Approx(1.0));
  CHECK(drift(spec, nu, std::vector<double>{7.0})[0] == doctest::Approx(1.0));
}

TEST_CASE("drift rejects spacings outside the support") {
  const auto spec = preset_beta_tasep(6.0, 1.0, 2);
  CHECK_THROWS_AS(drift(spec, solve_nu(spec), std::vector<double>{0.0, 1.0}), SupportViolation);
}

TEST_CASE("record times snap to the step grid") {
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.horizon = 1.0;
  cfg.record_times = {1.0, 0.04, 0.26};
  CHECK(cfg.steps() == 10);
  CHECK(cfg.record_steps() == std::vector<std::size_t>{0, 3, 10});
  cfg.record_times.clear();
  CHECK(cfg.record_steps() == std::vector<std::size_t>{0, 10});
}

TEST_CASE("configuration errors") {
  SimConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  cfg.dt = 2.0;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  cfg.dt = 0.1;
  cfg.record_times = {1.5};
  CHECK_THROWS_AS(cfg.check(), ConfigError);
}

TEST_CASE("free Brownian motion") {
  const auto spec = preset_free(1);
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.n_paths = 100000;
  cfg.seed = 5;
  const auto ens = simulate(spec, solve_nu(spec), InitialCondition::fixed({0.0}), cfg);
  const auto m = moments(ens.position(1, 1));
  CHECK(std::abs(m.mean) < 3.0 * m.mean_se());
  CHECK(std::abs(m.variance - 0.5) < 3.0 * m.variance_se());
}

TEST_CASE("O'Connell-Yor pinned particle from the stationary start") {
  const auto spec = preset_oconnell_yor(2.0, 2);
  const auto nu = solve_nu(spec);
  SimConfig cfg;
  cfg.n_paths = 10000;
  const auto ens = simulate(spec, nu, stationary(spec, nu), cfg);
  CHECK(ens.n_paths() == 10000);
  for (double x : ens.position(0, 1)) REQUIRE(x == 0.0);
  const auto m = moments(ens.position(1, 1));
  CHECK(std::abs(m.mean - 1.0) < 3.0 * m.mean_se());
  CHECK(std::abs(m.variance - 0.5) < 3.0 * m.variance_se());
}

TEST_CASE("constant shift of the start shifts every recorded position") {
  const auto spec = preset_oconnell_yor(2.0, 4);
  const auto nu = solve_nu(spec);
  SimConfig cfg;
  cfg.n_paths = 200;
  cfg.record_times = {0.0, 0.25, 0.5, 1.0};
  Eigen::MatrixXd start(1, 4);
  start << 0.0, -0.3, 0.4, -1.0;
  const auto a = simulate(spec, nu, InitialCondition::per_path(start), cfg);
  const auto b = simulate(spec, nu, InitialCondition::per_path(start.array() + 5.0), cfg);
  double worst = 0.0;
  for (std::size_t r = 0; r < a.times.size(); ++r)
    worst = std::max(worst, (b.positions[r].array() - a.positions[r].array() - 5.0).abs().maxCoeff());
  CHECK(worst < 1e-10);
}

TEST_CASE("ensembles do not depend on the thread count") {
  const auto spec = preset_beta_tasep(6.0, 1.0, 3);
  const auto nu = solve_nu(spec);
  SimConfig cfg;
  cfg.n_paths = 301;
  cfg.dt = 0.01;
  cfg.record_times = {0.0, 0.5, 1.0};
  cfg.threads = 1;
  const auto a = simulate(spec, nu, stationary(spec, nu), cfg);
  cfg.threads = 4;
  const auto b = simulate(spec, nu, stationary(spec, nu), cfg);
  REQUIRE(a.positions.size() == b.positions.size());
  for (std::size_t r = 0; r < a.positions.size(); ++r) CHECK(a.positions[r] == b.positions[r]);
  CHECK(a.halvings == b.halvings);
}

TEST_CASE("half-line spacings stay above the floor") {
  const auto spec = preset_beta_tasep(4.5, 1.0, 4);
  const auto nu = solve_nu(spec);
  SimConfig cfg;
  cfg.n_paths = 2000;
  cfg.dt = 0.01;
  cfg.record_times = {0.0, 0.1, 0.2, 0.5, 1.0};
  const auto ens = simulate(spec, nu, stationary(spec, nu), cfg);
  CHECK(ens.failures.empty());
  for (std::size_t r = 0; r < ens.times.size(); ++r)
    for (int k = 1; k < 4; ++k)
      for (double y : ens.spacing(r, k)) REQUIRE(y >= cfg.floor_eps);
  // With beta close to 4 some steps land on the wrong side and are halved.
  CHECK(ens.halvings > 0);
}

TEST_CASE("too many failed paths") {
  const auto spec = preset_beta_tasep(6.0, 1.0, 3);
  const auto nu = solve_nu(spec);
  SimConfig cfg;
  cfg.n_paths = 200;
  cfg.dt = 0.5;
  cfg.floor_eps = 0.5;
  cfg.max_halvings = 0;
  Eigen::MatrixXd start(1, 3);
  start << 0.0, -0.6, -1.2;
  CHECK_THROWS_AS(simulate(spec, nu, InitialCondition::per_path(start), cfg), FailureRateExceeded);
}

TEST_CASE("initial condition must match K") {
  const auto spec = preset_oconnell_yor(2.0, 3);
  CHECK_THROWS_AS(simulate(spec, solve_nu(spec), InitialCondition::fixed({0.0, 0.0}), SimConfig{}), ConfigError);
}

TEST_CASE("weak error of the pinned particle mean does not grow as dt shrinks") {
  // Reduced from 10^6 paths to keep the unit suite short; see README.
  const auto spec = preset_oconnell_yor(2.0, 2);
  const auto nu = solve_nu(spec);
  std::vector<double> err;
  std::vector<double> se;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    SimConfig cfg;
    cfg.dt = dt;
    cfg.n_paths = 100000;
    cfg.seed = 99;
    const auto ens = simulate(spec, nu, stationary(spec, nu), cfg);
    const auto m = moments(ens.position(1, 1));
    err.push_back(std::abs(m.mean - 1.0));
    se.push_back(m.mean_se());
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const bool above_noise = err[i + 1] > 3.0 * se[i + 1];
    if (above_noise) CHECK(err[i + 1] < err[i]);
  }
  CHECK(err.back() < 3.0 * se.back());
}
