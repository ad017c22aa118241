#include <doctest.h>

#include <cmath>

#include "qsbrown/errors.hpp"
#include "qsbrown/expression.hpp"

using qsb::Expression;

TEST_CASE("arithmetic and precedence") {
  CHECK(Expression::parse("1 + 2 * 3")(0.0) == doctest::Approx(7.0));
  CHECK(Expression::parse("(1 + 2) * 3")(0.0) == doctest::Approx(9.0));
  CHECK(Expression::parse("2 ^ 3 ^ 2")(0.0) == doctest::Approx(512.0));
  CHECK(Expression::parse("-z ^ 2")(3.0) == doctest::Approx(-9.0));
  CHECK(Expression::parse("8 / 2 / 2")(0.0) == doctest::Approx(2.0));
  CHECK(Expression::parse("1.5e-1 * z")(2.0) == doctest::Approx(0.3));
}

TEST_CASE("functions of z") {
  const auto e = Expression::parse("-(2*z + exp(-z))/2");
  for (double z : {-1.0, 0.0, 0.7, 3.0})
    CHECK(e(z) == doctest::Approx(-(2 * z + std::exp(-z)) / 2).epsilon(1e-14));
  CHECK(Expression::parse("log(z)")(std::exp(2.0)) == doctest::Approx(2.0));
}

TEST_CASE("symbolic derivative matches closed forms") {
  const auto u = Expression::parse("1 * log(z) - 0.5 * z");
  const auto du = u.derivative();
  for (double z : {0.3, 1.0, 4.0}) CHECK(du(z) == doctest::Approx(1.0 / z - 0.5).epsilon(1e-14));

  const auto oy = Expression::parse("-(2*z + exp(-z))/2").derivative();
  for (double z : {-2.0, 0.0, 1.5}) CHECK(oy(z) == doctest::Approx(-1.0 + 0.5 * std::exp(-z)).epsilon(1e-14));

  const auto p = Expression::parse("z^3 / (1 + z^2)").derivative();
  for (double z : {-1.0, 0.5, 2.0}) {
    const double expect = (3 * z * z * (1 + z * z) - z * z * z * 2 * z) / ((1 + z * z) * (1 + z * z));
    CHECK(p(z) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("derivative of a constant is zero") {
  CHECK(Expression::constant(4.0).derivative()(1.0) == 0.0);
  CHECK(Expression::parse("3").derivative()(2.0) == 0.0);
}

TEST_CASE("to_string reparses to the same function") {
  const auto e = Expression::parse("exp(-z)*z^2 - log(1+z)");
  const auto back = Expression::parse(e.to_string());
  for (double z : {0.1, 1.0, 2.5}) CHECK(back(z) == doctest::Approx(e(z)).epsilon(1e-14));
}

TEST_CASE("syntax errors") {
  CHECK_THROWS_AS(Expression::parse(""), qsb::ExpressionError);
  CHECK_THROWS_AS(Expression::parse("1 +"), qsb::ExpressionError);
  CHECK_THROWS_AS(Expression::parse("(z"), qsb::ExpressionError);
  CHECK_THROWS_AS(Expression::parse("sin(z)"), qsb::ExpressionError);
  CHECK_THROWS_AS(Expression::parse("x + 1"), qsb::ExpressionError);
  CHECK_THROWS_AS(Expression::parse("z z"), qsb::ExpressionError);
}
