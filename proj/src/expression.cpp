#include "qsbrown/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "qsbrown/errors.hpp"

namespace qsb {

struct Expression::Node {
  enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Log, Exp };
  Kind kind;
  double value = 0.0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;
using Kind = Node::Kind;

NodePtr make_constant(double v) { return std::make_shared<const Node>(Node{Kind::Constant, v, {}, {}}); }
NodePtr make_variable() { return std::make_shared<const Node>(Node{Kind::Variable, 0.0, {}, {}}); }

bool is_constant(const NodePtr& n, double v) { return n->kind == Kind::Constant && n->value == v; }

// Light constant folding keeps derivative trees readable.
NodePtr make_node(Kind kind, NodePtr lhs, NodePtr rhs = nullptr) {
  switch (kind) {
    case Kind::Add:
      if (is_constant(lhs, 0.0)) return rhs;
      if (is_constant(rhs, 0.0)) return lhs;
      break;
    case Kind::Sub:
      if (is_constant(rhs, 0.0)) return lhs;
      if (is_constant(lhs, 0.0)) return make_node(Kind::Neg, rhs);
      break;
    case Kind::Mul:
      if (is_constant(lhs, 0.0) || is_constant(rhs, 0.0)) return make_constant(0.0);
      if (is_constant(lhs, 1.0)) return rhs;
      if (is_constant(rhs, 1.0)) return lhs;
      break;
    case Kind::Div:
      if (is_constant(lhs, 0.0)) return make_constant(0.0);
      if (is_constant(rhs, 1.0)) return lhs;
      break;
    case Kind::Pow:
      if (is_constant(rhs, 1.0)) return lhs;
      if (is_constant(rhs, 0.0)) return make_constant(1.0);
      break;
    case Kind::Neg:
      if (lhs->kind == Kind::Constant) return make_constant(-lhs->value);
      break;
    default:
      break;
  }
  if (lhs && lhs->kind == Kind::Constant && (!rhs || rhs->kind == Kind::Constant) &&
      kind != Kind::Constant && kind != Kind::Variable) {
    double a = lhs->value;
    double b = rhs ? rhs->value : 0.0;
    switch (kind) {
      case Kind::Add: return make_constant(a + b);
      case Kind::Sub: return make_constant(a - b);
      case Kind::Mul: return make_constant(a * b);
      case Kind::Div: return make_constant(a / b);
      case Kind::Pow: return make_constant(std::pow(a, b));
      case Kind::Log: return make_constant(std::log(a));
      case Kind::Exp: return make_constant(std::exp(a));
      default: break;
    }
  }
  return std::make_shared<const Node>(Node{kind, 0.0, std::move(lhs), std::move(rhs)});
}

double evaluate(const Node& n, double z) {
  switch (n.kind) {
    case Kind::Constant: return n.value;
    case Kind::Variable: return z;
    case Kind::Add: return evaluate(*n.lhs, z) + evaluate(*n.rhs, z);
    case Kind::Sub: return evaluate(*n.lhs, z) - evaluate(*n.rhs, z);
    case Kind::Mul: return evaluate(*n.lhs, z) * evaluate(*n.rhs, z);
    case Kind::Div: return evaluate(*n.lhs, z) / evaluate(*n.rhs, z);
    case Kind::Pow: return std::pow(evaluate(*n.lhs, z), evaluate(*n.rhs, z));
    case Kind::Neg: return -evaluate(*n.lhs, z);
    case Kind::Log: return std::log(evaluate(*n.lhs, z));
    case Kind::Exp: return std::exp(evaluate(*n.lhs, z));
  }
  return 0.0;
}

bool depends_on_z(const NodePtr& n) {
  if (!n) return false;
  if (n->kind == Kind::Variable) return true;
  return depends_on_z(n->lhs) || depends_on_z(n->rhs);
}

NodePtr differentiate(const NodePtr& n) {
  switch (n->kind) {
    case Kind::Constant: return make_constant(0.0);
    case Kind::Variable: return make_constant(1.0);
    case Kind::Add: return make_node(Kind::Add, differentiate(n->lhs), differentiate(n->rhs));
    case Kind::Sub: return make_node(Kind::Sub, differentiate(n->lhs), differentiate(n->rhs));
    case Kind::Neg: return make_node(Kind::Neg, differentiate(n->lhs));
    case Kind::Mul:
      return make_node(Kind::Add, make_node(Kind::Mul, differentiate(n->lhs), n->rhs),
                       make_node(Kind::Mul, n->lhs, differentiate(n->rhs)));
    case Kind::Div: {
      auto num = make_node(Kind::Sub, make_node(Kind::Mul, differentiate(n->lhs), n->rhs),
                           make_node(Kind::Mul, n->lhs, differentiate(n->rhs)));
      return make_node(Kind::Div, num, make_node(Kind::Pow, n->rhs, make_constant(2.0)));
    }
    case Kind::Pow: {
      if (!depends_on_z(n->rhs)) {
        // c * f^(c-1) * f'
        auto reduced = make_node(Kind::Sub, n->rhs, make_constant(1.0));
        return make_node(Kind::Mul, make_node(Kind::Mul, n->rhs, make_node(Kind::Pow, n->lhs, reduced)),
                         differentiate(n->lhs));
      }
      // f^g * (g' log f + g f'/f)
      auto term1 = make_node(Kind::Mul, differentiate(n->rhs), make_node(Kind::Log, n->lhs));
      auto term2 = make_node(Kind::Div, make_node(Kind::Mul, n->rhs, differentiate(n->lhs)), n->lhs);
      return make_node(Kind::Mul, n, make_node(Kind::Add, term1, term2));
    }
    case Kind::Log: return make_node(Kind::Div, differentiate(n->lhs), n->lhs);
    case Kind::Exp: return make_node(Kind::Mul, n, differentiate(n->lhs));
  }
  return make_constant(0.0);
}

void print(const Node& n, std::ostream& os) {
  switch (n.kind) {
    case Kind::Constant: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n.value;
      if (n.value < 0) os << "(" << tmp.str() << ")";
      else os << tmp.str();
      return;
    }
    case Kind::Variable: os << "z"; return;
    case Kind::Neg: os << "(-"; print(*n.lhs, os); os << ")"; return;
    case Kind::Log: os << "log("; print(*n.lhs, os); os << ")"; return;
    case Kind::Exp: os << "exp("; print(*n.lhs, os); os << ")"; return;
    default: break;
  }
  const char* op = "?";
  switch (n.kind) {
    case Kind::Add: op = " + "; break;
    case Kind::Sub: op = " - "; break;
    case Kind::Mul: op = " * "; break;
    case Kind::Div: op = " / "; break;
    case Kind::Pow: op = "^"; break;
    default: break;
  }
  os << "(";
  print(*n.lhs, os);
  os << op;
  print(*n.rhs, os);
  os << ")";
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto node = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError("expression error at offset " + std::to_string(pos_) + ": " + what +
                          " in '" + std::string(text_) + "'");
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_sum() {
    auto node = parse_product();
    for (;;) {
      if (accept('+')) node = make_node(Kind::Add, node, parse_product());
      else if (accept('-')) node = make_node(Kind::Sub, node, parse_product());
      else return node;
    }
  }

  NodePtr parse_product() {
    auto node = parse_unary();
    for (;;) {
      if (accept('*')) node = make_node(Kind::Mul, node, parse_unary());
      else if (accept('/')) node = make_node(Kind::Div, node, parse_unary());
      else return node;
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make_node(Kind::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    if (accept('^')) return make_node(Kind::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::string rest(text_.substr(pos_));
      char* end = nullptr;
      double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) fail("bad number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      return make_constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      std::string_view name = text_.substr(start, pos_ - start);
      if (name == "z") return make_variable();
      Kind fn;
      if (name == "log") fn = Kind::Log;
      else if (name == "exp") fn = Kind::Exp;
      else {
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "'");
      }
      if (!accept('(')) fail("expected '(' after function name");
      auto arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return make_node(fn, arg);
    }
    if (accept('(')) {
      auto inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    fail("unexpected character");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(std::string_view text) { return Expression(Parser(text).parse()); }

Expression Expression::constant(double value) { return Expression(make_constant(value)); }

double Expression::operator()(double z) const { return evaluate(*root_, z); }

Expression Expression::derivative() const { return Expression(differentiate(root_)); }

std::string Expression::to_string() const {
  std::ostringstream os;
  print(*root_, os);
  return os.str();
}

}  // namespace qsb
