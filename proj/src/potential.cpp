#include "qsbrown/potential.hpp"

#include <algorithm>
#include <cmath>

#include "qsbrown/errors.hpp"
#include "qsbrown/expression.hpp"

namespace qsb {

const char* to_string(Support s) {
  return s == Support::FullLine ? "full" : "positive";
}

Support support_from_string(const std::string& s) {
  if (s == "full" || s == "FullLine") return Support::FullLine;
  if (s == "positive" || s == "PositiveHalfLine") return Support::PositiveHalfLine;
  throw ConfigError("unknown support '" + s + "' (expected 'full' or 'positive')");
}

Potential::Potential(Fn value, Fn derivative, Support support, nlohmann::json descriptor)
    : value_(std::move(value)),
      derivative_(std::move(derivative)),
      support_(support),
      descriptor_(std::move(descriptor)) {}

bool Potential::in_support(double z) const {
  if (!std::isfinite(z)) return false;
  return support_ == Support::FullLine || z > 0.0;
}

Potential Potential::beta_tasep(double beta, double mu) {
  const double c = beta / 4.0 - 0.5;
  const double half_mu = mu / 2.0;
  return Potential([c, half_mu](double z) { return c * std::log(z) - half_mu * z; },
                   [c, half_mu](double z) { return c / z - half_mu; }, Support::PositiveHalfLine,
                   {{"kind", "beta_tasep"}, {"beta", beta}, {"mu", mu}});
}

Potential Potential::oconnell_yor(double mu) {
  return Potential([mu](double z) { return -0.5 * (mu * z + std::exp(-z)); },
                   [mu](double z) { return -0.5 * (mu - std::exp(-z)); }, Support::FullLine,
                   {{"kind", "oy"}, {"mu", mu}});
}

Potential Potential::zero() {
  return Potential([](double) { return 0.0; }, [](double) { return 0.0; }, Support::FullLine,
                   {{"kind", "custom"}, {"U", "0"}, {"support", "full"}});
}

Potential Potential::from_expression(const std::string& value_expr,
                                     const std::optional<std::string>& derivative_expr,
                                     Support support) {
  auto value = Expression::parse(value_expr);
  auto derivative = derivative_expr ? Expression::parse(*derivative_expr) : value.derivative();
  nlohmann::json desc = {{"kind", "custom"}, {"U", value_expr}, {"support", to_string(support)}};
  if (derivative_expr) desc["dU"] = *derivative_expr;
  return Potential(value, derivative, support, std::move(desc));
}

double derivative_mismatch(const Potential& potential, std::span<const double> points, double h) {
  double worst = 0.0;
  for (double z : points) {
    if (!potential.in_support(z - h) || !potential.in_support(z + h)) continue;
    const double fd = (potential.value(z + h) - potential.value(z - h)) / (2.0 * h);
    worst = std::max(worst, std::abs(potential.derivative(z) - fd));
  }
  return worst;
}

}  // namespace qsb
