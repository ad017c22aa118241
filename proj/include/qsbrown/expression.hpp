#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace qsb {

/// Closed-form expression in one variable `z`.
///
/// Grammar: numbers, `z`, `+ - * / ^` (with `^` right-associative and binding
/// tighter than unary minus), parentheses and the functions `log` and `exp`.
/// Expressions are immutable and cheap to copy (shared syntax tree).
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view text);
  static Expression constant(double value);

  double operator()(double z) const;

  /// Symbolic derivative with respect to `z`.
  Expression derivative() const;

  std::string to_string() const;

 private:
  explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace qsb
