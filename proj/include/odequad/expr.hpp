#pragma once

// Univariate coefficient expressions: parsing, printing, evaluation and exact
// symbolic differentiation. Expressions are immutable trees shared by
// reference count, so copies are cheap and concurrent evaluation is safe.
//
// Grammar (whitespace ignored):
//
//   expr   := term (("+" | "-") term)*
//   term   := unary (("*" | "/") unary)*
//   unary  := "-" unary | factor
//   factor := base ("^" unary)?
//   base   := number | "x" | "pi" | "e" | ident "(" expr ")" | "(" expr ")"
//   ident  := sin | cos | tan | atan | exp | ln | sqrt | abs | sign
//
// "^" is right-associative and binds tighter than unary minus, so "-x^2"
// means -(x^2).

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "odequad/errors.hpp"

namespace odequad {

enum class NodeKind { Constant, NamedConstant, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

enum class Func { Sin, Cos, Tan, Atan, Exp, Ln, Sqrt, Abs, Sign };

enum class NamedConstant { Pi, E };

inline constexpr std::array<std::pair<std::string_view, Func>, 9> kFunctionNames{{
    {"sin", Func::Sin},
    {"cos", Func::Cos},
    {"tan", Func::Tan},
    {"atan", Func::Atan},
    {"exp", Func::Exp},
    {"ln", Func::Ln},
    {"sqrt", Func::Sqrt},
    {"abs", Func::Abs},
    {"sign", Func::Sign},
}};

inline std::string_view function_name(Func f) {
  for (const auto& [name, func] : kFunctionNames) {
    if (func == f) return name;
  }
  return "?";
}

struct Node;

class Expression {
 public:
  Expression() : Expression(constant(0.0)) {}

  static Expression constant(double c);
  static Expression named(NamedConstant which);
  static Expression variable();
  static Expression negate(Expression operand);
  static Expression binary(NodeKind kind, Expression lhs, Expression rhs);
  static Expression call(Func f, Expression arg);

  NodeKind kind() const;
  double constant_value() const;  // Constant or NamedConstant
  NamedConstant named_constant() const;
  Func func() const;
  std::span<const Expression> children() const;

  bool is_constant() const { return kind() == NodeKind::Constant; }
  bool is_constant(double c) const { return is_constant() && constant_value() == c; }

  double operator()(double x) const;

 private:
  explicit Expression(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Node {
  NodeKind kind{NodeKind::Constant};
  double value{0.0};
  NamedConstant named{NamedConstant::Pi};
  Func func{Func::Sin};
  std::vector<Expression> children;
};

inline Expression Expression::constant(double c) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Constant;
  n->value = c;
  return Expression(std::move(n));
}

inline Expression Expression::named(NamedConstant which) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::NamedConstant;
  n->named = which;
  n->value = which == NamedConstant::Pi ? std::numbers::pi : std::numbers::e;
  return Expression(std::move(n));
}

inline Expression Expression::variable() {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  return Expression(std::move(n));
}

inline Expression Expression::negate(Expression operand) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Negate;
  n->children.push_back(std::move(operand));
  return Expression(std::move(n));
}

inline Expression Expression::binary(NodeKind kind, Expression lhs, Expression rhs) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->children.push_back(std::move(lhs));
  n->children.push_back(std::move(rhs));
  return Expression(std::move(n));
}

inline Expression Expression::call(Func f, Expression arg) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Call;
  n->func = f;
  n->children.push_back(std::move(arg));
  return Expression(std::move(n));
}

inline NodeKind Expression::kind() const { return node_->kind; }
inline double Expression::constant_value() const { return node_->value; }
inline NamedConstant Expression::named_constant() const { return node_->named; }
inline Func Expression::func() const { return node_->func; }
inline std::span<const Expression> Expression::children() const { return node_->children; }

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite value in ") + what);
  return v;
}

inline double apply(Func f, double a) {
  switch (f) {
    case Func::Sin: return std::sin(a);
    case Func::Cos: return std::cos(a);
    case Func::Tan: return checked(std::tan(a), "tan");
    case Func::Atan: return std::atan(a);
    case Func::Exp: return checked(std::exp(a), "exp");
    case Func::Ln:
      if (!(a > 0.0)) throw DomainError("ln of non-positive argument");
      return std::log(a);
    case Func::Sqrt:
      if (a < 0.0) throw DomainError("sqrt of negative argument");
      return std::sqrt(a);
    case Func::Abs: return std::fabs(a);
    case Func::Sign:
      if (a == 0.0) throw DomainError("sign (derivative of abs) undefined at 0");
      return a > 0.0 ? 1.0 : -1.0;
  }
  return 0.0;
}

inline double power(double b, double p) {
  if (b == 0.0 && p < 0.0) throw DomainError("division by zero in power");
  if (b < 0.0 && p != std::nearbyint(p)) throw DomainError("negative base with non-integer exponent");
  return checked(std::pow(b, p), "pow");
}

inline double eval_node(const Expression& e, double x) {
  switch (e.kind()) {
    case NodeKind::Constant:
    case NodeKind::NamedConstant: return e.constant_value();
    case NodeKind::Variable: return x;
    case NodeKind::Negate: return -eval_node(e.children()[0], x);
    case NodeKind::Call: return apply(e.func(), eval_node(e.children()[0], x));
    default: break;
  }
  const double a = eval_node(e.children()[0], x);
  const double b = eval_node(e.children()[1], x);
  switch (e.kind()) {
    case NodeKind::Add: return checked(a + b, "sum");
    case NodeKind::Sub: return checked(a - b, "difference");
    case NodeKind::Mul: return checked(a * b, "product");
    case NodeKind::Div:
      if (b == 0.0) throw DomainError("division by zero");
      return checked(a / b, "quotient");
    case NodeKind::Pow: return power(a, b);
    default: return 0.0;
  }
}

}  // namespace detail

inline double Expression::operator()(double x) const { return detail::eval_node(*this, x); }

inline double eval(const Expression& e, double x) { return e(x); }

// ---------------------------------------------------------------------------
// Structure

inline bool structurally_equal(const Expression& a, const Expression& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case NodeKind::Constant: return a.constant_value() == b.constant_value();
    case NodeKind::NamedConstant: return a.named_constant() == b.named_constant();
    case NodeKind::Variable: return true;
    case NodeKind::Call:
      if (a.func() != b.func()) return false;
      break;
    default: break;
  }
  const auto ca = a.children();
  const auto cb = b.children();
  if (ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (!structurally_equal(ca[i], cb[i])) return false;
  }
  return true;
}

inline bool depends_on_x(const Expression& e) {
  if (e.kind() == NodeKind::Variable) return true;
  for (const auto& c : e.children()) {
    if (depends_on_x(c)) return true;
  }
  return false;
}

inline std::size_t node_count(const Expression& e) {
  std::size_t n = 1;
  for (const auto& c : e.children()) n += node_count(c);
  return n;
}

// ---------------------------------------------------------------------------
// Printing (fully parenthesized; parse(to_string(e)) reproduces e exactly)

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return std::to_string(v);
  return std::string(buf.data(), end);
}

inline std::string to_string(const Expression& e) {
  switch (e.kind()) {
    case NodeKind::Constant: {
      const double v = e.constant_value();
      if (std::signbit(v)) return "(-" + format_number(-v) + ")";
      return format_number(v);
    }
    case NodeKind::NamedConstant: return e.named_constant() == NamedConstant::Pi ? "pi" : "e";
    case NodeKind::Variable: return "x";
    case NodeKind::Negate: return "(-" + to_string(e.children()[0]) + ")";
    case NodeKind::Call:
      return std::string(function_name(e.func())) + "(" + to_string(e.children()[0]) + ")";
    default: break;
  }
  const char* op = "?";
  switch (e.kind()) {
    case NodeKind::Add: op = " + "; break;
    case NodeKind::Sub: op = " - "; break;
    case NodeKind::Mul: op = "*"; break;
    case NodeKind::Div: op = "/"; break;
    case NodeKind::Pow: op = "^"; break;
    default: break;
  }
  return "(" + to_string(e.children()[0]) + op + to_string(e.children()[1]) + ")";
}

// ---------------------------------------------------------------------------
// Parsing

enum class ParseErrorKind { Syntax, UnknownIdentifier };

class ExpressionParseError : public ParseError {
 public:
  ExpressionParseError(ParseErrorKind kind, const std::string& what, std::size_t offset)
      : ParseError(what, offset), kind_(kind) {}
  ParseErrorKind kind() const noexcept { return kind_; }

 private:
  ParseErrorKind kind_;
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expression parse() {
    Expression e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ExpressionParseError(ParseErrorKind::Syntax, "syntax error: " + msg, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\n' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size()) fail(std::string("unexpected end of input, expected '") + c + "'");
    if (text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  Expression expr() {
    Expression lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expression::binary(NodeKind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = Expression::binary(NodeKind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  Expression term() {
    Expression lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expression::binary(NodeKind::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = Expression::binary(NodeKind::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  Expression unary() {
    if (accept('-')) {
      Expression operand = unary();
      // A negated literal is a negative literal.
      if (operand.is_constant()) return Expression::constant(-operand.constant_value());
      return Expression::negate(operand);
    }
    return factor();
  }

  Expression factor() {
    Expression b = base();
    if (accept('^')) return Expression::binary(NodeKind::Pow, b, unary());
    return b;
  }

  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }

  Expression number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && is_digit(text_[p])) {
        pos_ = p;
        while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc{} || res.ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return Expression::constant(v);
  }

  Expression base() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (is_digit(c) || (c == '.' && pos_ + 1 < text_.size() && is_digit(text_[pos_ + 1]))) {
      return number();
    }
    if (c == '(') {
      ++pos_;
      Expression inner = expr();
      expect(')');
      return inner;
    }
    if (is_alpha(c)) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (is_alpha(text_[pos_]) || is_digit(text_[pos_]))) ++pos_;
      const std::string_view id = text_.substr(start, pos_ - start);
      if (id == "x") return Expression::variable();
      if (id == "pi") return Expression::named(NamedConstant::Pi);
      if (id == "e") return Expression::named(NamedConstant::E);
      for (const auto& [name, func] : kFunctionNames) {
        if (id == name) {
          expect('(');
          Expression arg = expr();
          expect(')');
          return Expression::call(func, arg);
        }
      }
      throw ExpressionParseError(ParseErrorKind::UnknownIdentifier,
                                 "unknown identifier '" + std::string(id) + "'", start);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_{0};
};

}  // namespace detail

inline Expression parse(std::string_view text) { return detail::Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Folding constructors: constant folding and 0/1 identities only.

inline Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.constant_value());
  if (a.kind() == NodeKind::Negate) return a.children()[0];
  return Expression::negate(a);
}

inline Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() + b.constant_value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expression::binary(NodeKind::Add, a, b);
}

inline Expression operator-(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() - b.constant_value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  return Expression::binary(NodeKind::Sub, a, b);
}

inline Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() * b.constant_value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expression::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  return Expression::binary(NodeKind::Mul, a, b);
}

inline Expression operator/(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0) {
    return Expression::constant(a.constant_value() / b.constant_value());
  }
  if (a.is_constant(0.0) && !b.is_constant()) return Expression::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return Expression::binary(NodeKind::Div, a, b);
}

inline Expression pow(const Expression& a, const Expression& b) {
  if (b.is_constant(0.0)) return Expression::constant(1.0);
  if (b.is_constant(1.0)) return a;
  if (a.is_constant() && b.is_constant()) {
    const double v = std::pow(a.constant_value(), b.constant_value());
    if (std::isfinite(v)) return Expression::constant(v);
  }
  return Expression::binary(NodeKind::Pow, a, b);
}

inline Expression operator+(const Expression& a, double b) { return a + Expression::constant(b); }
inline Expression operator+(double a, const Expression& b) { return Expression::constant(a) + b; }
inline Expression operator-(const Expression& a, double b) { return a - Expression::constant(b); }
inline Expression operator-(double a, const Expression& b) { return Expression::constant(a) - b; }
inline Expression operator*(const Expression& a, double b) { return a * Expression::constant(b); }
inline Expression operator*(double a, const Expression& b) { return Expression::constant(a) * b; }
inline Expression operator/(const Expression& a, double b) { return a / Expression::constant(b); }
inline Expression operator/(double a, const Expression& b) { return Expression::constant(a) / b; }
inline Expression pow(const Expression& a, double b) { return pow(a, Expression::constant(b)); }

namespace fn {

inline Expression apply(Func f, const Expression& a) {
  if (a.is_constant()) {
    try {
      return Expression::constant(detail::apply(f, a.constant_value()));
    } catch (const DomainError&) {
      // left unfolded; evaluation reports the error
    }
  }
  return Expression::call(f, a);
}

inline Expression sin(const Expression& a) { return apply(Func::Sin, a); }
inline Expression cos(const Expression& a) { return apply(Func::Cos, a); }
inline Expression tan(const Expression& a) { return apply(Func::Tan, a); }
inline Expression atan(const Expression& a) { return apply(Func::Atan, a); }
inline Expression exp(const Expression& a) { return apply(Func::Exp, a); }
inline Expression ln(const Expression& a) { return apply(Func::Ln, a); }
inline Expression sqrt(const Expression& a) { return apply(Func::Sqrt, a); }
inline Expression abs(const Expression& a) { return apply(Func::Abs, a); }
inline Expression sign(const Expression& a) { return apply(Func::Sign, a); }

}  // namespace fn

inline Expression constant(double c) { return Expression::constant(c); }
inline Expression var_x() { return Expression::variable(); }

// ---------------------------------------------------------------------------
// Differentiation

inline Expression differentiate(const Expression& e) {
  switch (e.kind()) {
    case NodeKind::Constant:
    case NodeKind::NamedConstant: return constant(0.0);
    case NodeKind::Variable: return constant(1.0);
    case NodeKind::Negate: return -differentiate(e.children()[0]);
    default: break;
  }
  if (e.kind() == NodeKind::Call) {
    const Expression& u = e.children()[0];
    const Expression du = differentiate(u);
    if (du.is_constant(0.0)) return constant(0.0);
    switch (e.func()) {
      case Func::Sin: return fn::cos(u) * du;
      case Func::Cos: return -(fn::sin(u) * du);
      case Func::Tan: return du / pow(fn::cos(u), 2.0);
      case Func::Atan: return du / (1.0 + pow(u, 2.0));
      case Func::Exp: return e * du;
      case Func::Ln: return du / u;
      case Func::Sqrt: return du / (2.0 * e);
      case Func::Abs: return fn::sign(u) * du;
      case Func::Sign: return constant(0.0);
    }
  }
  const Expression& u = e.children()[0];
  const Expression& v = e.children()[1];
  const Expression du = differentiate(u);
  const Expression dv = differentiate(v);
  switch (e.kind()) {
    case NodeKind::Add: return du + dv;
    case NodeKind::Sub: return du - dv;
    case NodeKind::Mul: return du * v + u * dv;
    case NodeKind::Div: return du / v - u * dv / pow(v, 2.0);
    case NodeKind::Pow:
      if (!depends_on_x(v)) return v * pow(u, v - 1.0) * du;
      if (!depends_on_x(u)) return fn::ln(u) * e * dv;
      return e * (dv * fn::ln(u) + v * du / u);
    default: return constant(0.0);
  }
}

// Repeated derivative, order >= 0.
inline Expression differentiate(const Expression& e, int order) {
  Expression d = e;
  for (int i = 0; i < order; ++i) d = differentiate(d);
  return d;
}

}  // namespace odequad
