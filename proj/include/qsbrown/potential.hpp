#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

namespace qsb {

enum class Support { FullLine, PositiveHalfLine };

const char* to_string(Support s);
Support support_from_string(const std::string& s);

/// Interaction potential U with its derivative U'.
///
/// `descriptor` is the JSON form the potential was built from; it is what the
/// model serializer writes back out.
class Potential {
 public:
  using Fn = std::function<double(double)>;

  Potential(Fn value, Fn derivative, Support support, nlohmann::json descriptor = {});

  /// U(z) = (beta/4 - 1/2) log z - (mu/2) z on (0, inf).
  static Potential beta_tasep(double beta, double mu);
  /// U(z) = -(mu z + e^{-z}) / 2 on the real line.
  static Potential oconnell_yor(double mu);
  /// U == 0 on the real line (non-normalizable).
  static Potential zero();
  /// Custom closed form; derivative is symbolic unless given explicitly.
  static Potential from_expression(const std::string& value_expr,
                                   const std::optional<std::string>& derivative_expr,
                                   Support support);

  double value(double z) const { return value_(z); }
  double derivative(double z) const { return derivative_(z); }
  Support support() const { return support_; }
  bool in_support(double z) const;
  const nlohmann::json& descriptor() const { return descriptor_; }

 private:
  Fn value_;
  Fn derivative_;
  Support support_;
  nlohmann::json descriptor_;
};

/// Largest |U'(z) - central difference| over the given interior points.
double derivative_mismatch(const Potential& potential, std::span<const double> points,
                           double h = 1e-5);

}  // namespace qsb
