#include <doctest.h>

#include <cmath>
#include <vector>

#include "qsbrown/stats.hpp"

using namespace qsb;

TEST_CASE("sample moments") {
  const std::vector<double> xs = {1, 2, 3, 4, 5};
  const auto m = moments(xs);
  CHECK(m.n == 5);
  CHECK(m.mean == doctest::Approx(3.0));
  CHECK(m.variance == doctest::Approx(2.5));
  // central fourth moment: (16 + 1 + 0 + 1 + 16) / 5
  CHECK(m.fourth_central == doctest::Approx(34.0 / 5.0));
  CHECK(m.mean_se() == doctest::Approx(std::sqrt(2.5 / 5.0)));
  CHECK(m.variance_se() == doctest::Approx(std::sqrt((34.0 / 5.0 - 2.5 * 2.5) / 5.0)));
}

TEST_CASE("one-sample KS statistic") {
  // Uniform CDF, points at the quartiles: D = max(i/n - F, F - (i-1)/n).
  const std::vector<double> xs = {0.25, 0.5, 0.75, 1.0};
  CHECK(ks_statistic(xs, [](double x) { return x; }) == doctest::Approx(0.25));
  const std::vector<double> ys = {0.1, 0.2};
  CHECK(ks_statistic(ys, [](double x) { return x; }) == doctest::Approx(0.8));
}

TEST_CASE("two-sample KS statistic") {
  CHECK(ks_two_sample_statistic({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_two_sample_statistic({1, 2, 3}, {4, 5, 6}) == doctest::Approx(1.0));
  CHECK(ks_two_sample_statistic({1, 3, 5, 7}, {2, 4, 6, 8}) == doctest::Approx(0.25));
  // Ties across samples are stepped together.
  CHECK(ks_two_sample_statistic({1, 1, 2}, {1, 2, 2}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("critical values") {
  CHECK(ks_critical_one_sample(100000) == doctest::Approx(1.628 / std::sqrt(1e5)));
  CHECK(ks_critical_two_sample(10000, 10000) == doctest::Approx(1.628 * std::sqrt(2.0 / 1e4)));
  // The asymptotic 1% point of the Kolmogorov distribution.
  CHECK(kolmogorov_survival(1.628) == doctest::Approx(0.01).epsilon(0.01));
  CHECK(kolmogorov_survival(0.0) == 1.0);
}
