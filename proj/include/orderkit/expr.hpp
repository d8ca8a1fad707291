#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace orderkit {

/// Thrown when an expression is evaluated outside its mathematical domain
/// (log or sqrt of a negative number, division by zero, 0 raised to a
/// negative power, ...). Out-of-domain never yields a silent NaN.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure. Carries the byte offset into the input and the offending
/// token (empty at end of input).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, const std::string& message, std::string token)
      : std::runtime_error(message + " at offset " + std::to_string(position)),
        position_(position),
        token_(std::move(token)) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& token() const noexcept { return token_; }

 private:
  std::size_t position_;
  std::string token_;
};

enum class NodeKind {
  Constant,
  Variable,
  Pi,
  E,
  Neg,
  Log,   // natural logarithm
  Exp,
  Sqrt,
  Sin,
  Cos,
  Abs,
  Floor,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
};

/// Immutable expression tree over a single real variable x.
///
/// Trees are shared via reference counting; copies are cheap and evaluation
/// is re-entrant, so a single Expr may be used from many threads at once.
class Expr {
 public:
  static Expr constant(double v) { return Expr(make(NodeKind::Constant, v)); }
  static Expr variable() { return Expr(make(NodeKind::Variable)); }
  static Expr pi() { return Expr(make(NodeKind::Pi)); }
  static Expr e() { return Expr(make(NodeKind::E)); }

  static Expr unary(NodeKind k, const Expr& a) {
    auto n = make(k);
    n->a = a.node_;
    return Expr(std::move(n));
  }

  static Expr binary(NodeKind k, const Expr& a, const Expr& b) {
    auto n = make(k);
    n->a = a.node_;
    n->b = b.node_;
    return Expr(std::move(n));
  }

  NodeKind kind() const noexcept { return node_->kind; }

  /// Value of a Constant node.
  double value() const {
    if (kind() != NodeKind::Constant) throw std::logic_error("value() on non-constant node");
    return node_->value;
  }

  std::size_t arity() const noexcept {
    if (node_->b) return 2;
    if (node_->a) return 1;
    return 0;
  }

  Expr child(std::size_t i) const {
    if (i == 0 && node_->a) return Expr(node_->a);
    if (i == 1 && node_->b) return Expr(node_->b);
    throw std::logic_error("child index out of range");
  }

  bool is_constant(double v) const {
    return kind() == NodeKind::Constant && node_->value == v;
  }

  /// Structural equality (same shape, same constants bit-for-bit).
  bool identical(const Expr& other) const { return identical(node_.get(), other.node_.get()); }

  std::string str() const;

 private:
  struct Node {
    NodeKind kind;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;
  };
  using NodePtr = std::shared_ptr<const Node>;

  explicit Expr(NodePtr n) : node_(std::move(n)) {}

  static std::shared_ptr<Node> make(NodeKind k, double v = 0.0) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->value = v;
    return n;
  }

  static bool identical(const Node* x, const Node* y) {
    if (x->kind != y->kind) return false;
    if (x->kind == NodeKind::Constant && x->value != y->value) return false;
    if (bool(x->a) != bool(y->a) || bool(x->b) != bool(y->b)) return false;
    if (x->a && !identical(x->a.get(), y->a.get())) return false;
    if (x->b && !identical(x->b.get(), y->b.get())) return false;
    return true;
  }

  NodePtr node_;

  friend class Parser;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Precedence levels used by both the parser and the printer.
// Add/Sub 10, Mul/Div 20, unary minus 25, Pow 30 (right associative).
inline int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub:
      return 10;
    case NodeKind::Mul:
    case NodeKind::Div:
      return 20;
    case NodeKind::Neg:
      return 25;
    case NodeKind::Pow:
      return 30;
    default:
      return 100;
  }
}

inline const char* function_name(NodeKind k) {
  switch (k) {
    case NodeKind::Log: return "log";
    case NodeKind::Exp: return "exp";
    case NodeKind::Sqrt: return "sqrt";
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Abs: return "abs";
    case NodeKind::Floor: return "floor";
    default: return nullptr;
  }
}

inline void print_node(const Expr& e, int context, std::string& out) {
  NodeKind k = e.kind();
  int prec = precedence(k);
  // Negative literals bind like unary minus when printed.
  if (k == NodeKind::Constant && e.value() < 0) prec = precedence(NodeKind::Neg);
  const bool wrap = prec < context;
  if (wrap) out += '(';
  switch (k) {
    case NodeKind::Constant:
      out += format_double(e.value());
      break;
    case NodeKind::Variable:
      out += 'x';
      break;
    case NodeKind::Pi:
      out += "pi";
      break;
    case NodeKind::E:
      out += 'e';
      break;
    case NodeKind::Neg: {
      out += '-';
      // A literal child must keep its own parentheses: "-3" re-reads as a
      // single negative literal, not as Neg applied to one.
      const Expr inner = e.child(0);
      if (inner.kind() == NodeKind::Constant) {
        out += '(';
        print_node(inner, 0, out);
        out += ')';
      } else {
        print_node(inner, prec, out);
      }
      break;
    }
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      print_node(e.child(0), prec, out);
      out += (k == NodeKind::Add ? '+' : k == NodeKind::Sub ? '-' : k == NodeKind::Mul ? '*' : '/');
      print_node(e.child(1), prec + 1, out);
      break;
    case NodeKind::Pow:
      print_node(e.child(0), prec + 1, out);
      out += '^';
      print_node(e.child(1), prec, out);
      break;
    default:
      out += function_name(k);
      out += '(';
      print_node(e.child(0), 0, out);
      out += ')';
      break;
  }
  if (wrap) out += ')';
}

}  // namespace detail

inline std::string Expr::str() const {
  std::string out;
  detail::print_node(*this, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError(pos_, "unexpected trailing input", token_at(pos_));
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool eof() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string token_at(std::size_t p) const {
    if (p >= text_.size()) return "";
    std::size_t q = p;
    if (std::isalpha(static_cast<unsigned char>(text_[q]))) {
      while (q < text_.size() && std::isalnum(static_cast<unsigned char>(text_[q]))) ++q;
    } else {
      ++q;
    }
    return std::string(text_.substr(p, q - p));
  }

  Expr parse_sum() {
    Expr e = parse_term();
    for (;;) {
      if (consume('+'))
        e = Expr::binary(NodeKind::Add, e, parse_term());
      else if (consume('-'))
        e = Expr::binary(NodeKind::Sub, e, parse_term());
      else
        return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    for (;;) {
      if (consume('*'))
        e = Expr::binary(NodeKind::Mul, e, parse_factor());
      else if (consume('/'))
        e = Expr::binary(NodeKind::Div, e, parse_factor());
      else
        return e;
    }
  }

  // Unary minus binds looser than ^, so -x^2 reads as -(x^2). A minus
  // directly in front of a numeric literal folds into the literal.
  Expr parse_factor() {
    if (consume('-')) {
      skip_ws();
      if (pos_ < text_.size() &&
          (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
        Expr num = parse_number();
        if (consume('^'))
          return Expr::unary(NodeKind::Neg, Expr::binary(NodeKind::Pow, num, parse_factor()));
        return Expr::constant(-num.value());
      }
      return Expr::unary(NodeKind::Neg, parse_factor());
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (consume('^')) {
      // Right associative; the exponent may itself carry a unary minus.
      return Expr::binary(NodeKind::Pow, base, parse_factor());
    }
    return base;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(pos_, "unexpected end of input", "");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      if (!consume(')')) throw ParseError(pos_, "expected ')'", token_at(pos_));
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw ParseError(pos_, "unexpected character", token_at(pos_));
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    // Exponent suffix only when unambiguously numeric ("2e-3", "1e5").
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
        pos_ = q;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_)
      throw ParseError(start, "malformed number", std::string(text_.substr(start, pos_ - start)));
    return Expr::constant(v);
  }

  Expr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (name == "x") return Expr::variable();
    if (name == "pi") return Expr::pi();
    if (name == "e") return Expr::e();
    NodeKind k;
    if (name == "log") k = NodeKind::Log;
    else if (name == "exp") k = NodeKind::Exp;
    else if (name == "sqrt") k = NodeKind::Sqrt;
    else if (name == "sin") k = NodeKind::Sin;
    else if (name == "cos") k = NodeKind::Cos;
    else if (name == "abs") k = NodeKind::Abs;
    else if (name == "floor") k = NodeKind::Floor;
    else throw ParseError(start, "unknown identifier '" + name + "'", name);
    if (!consume('(')) throw ParseError(pos_, "expected '(' after '" + name + "'", token_at(pos_));
    Expr arg = parse_sum();
    if (!consume(')')) throw ParseError(pos_, "expected ')'", token_at(pos_));
    return Expr::unary(k, arg);
  }
};

inline Expr parse(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_integer_valued(double v) {
  return std::isfinite(v) && v == std::nearbyint(v);
}

}  // namespace detail

/// Plain IEEE double evaluation at x. Throws DomainError instead of
/// producing NaN.
inline double evaluate(const Expr& e, double x) {
  switch (e.kind()) {
    case NodeKind::Constant: return e.value();
    case NodeKind::Variable: return x;
    case NodeKind::Pi: return std::numbers::pi;
    case NodeKind::E: return std::numbers::e;
    case NodeKind::Neg: return -evaluate(e.child(0), x);
    case NodeKind::Log: {
      double v = evaluate(e.child(0), x);
      if (!(v > 0)) throw DomainError("log of non-positive value");
      return std::log(v);
    }
    case NodeKind::Exp: return std::exp(evaluate(e.child(0), x));
    case NodeKind::Sqrt: {
      double v = evaluate(e.child(0), x);
      if (v < 0) throw DomainError("sqrt of negative value");
      return std::sqrt(v);
    }
    case NodeKind::Sin: {
      double v = evaluate(e.child(0), x);
      if (std::isinf(v)) throw DomainError("sin of infinite argument");
      return std::sin(v);
    }
    case NodeKind::Cos: {
      double v = evaluate(e.child(0), x);
      if (std::isinf(v)) throw DomainError("cos of infinite argument");
      return std::cos(v);
    }
    case NodeKind::Abs: return std::fabs(evaluate(e.child(0), x));
    case NodeKind::Floor: return std::floor(evaluate(e.child(0), x));
    case NodeKind::Add: return evaluate(e.child(0), x) + evaluate(e.child(1), x);
    case NodeKind::Sub: return evaluate(e.child(0), x) - evaluate(e.child(1), x);
    case NodeKind::Mul: return evaluate(e.child(0), x) * evaluate(e.child(1), x);
    case NodeKind::Div: {
      double num = evaluate(e.child(0), x);
      double den = evaluate(e.child(1), x);
      if (den == 0) throw DomainError("division by zero");
      return num / den;
    }
    case NodeKind::Pow: {
      double b = evaluate(e.child(0), x);
      double p = evaluate(e.child(1), x);
      if (b == 0 && p < 0) throw DomainError("zero raised to a negative power");
      if (b < 0 && !detail::is_integer_valued(p))
        throw DomainError("negative base with non-integer exponent");
      double r = std::pow(b, p);
      if (std::isnan(r)) throw DomainError("pow out of domain");
      return r;
    }
  }
  throw std::logic_error("unreachable node kind");
}

/// A real number held as sign and log of magnitude: value = sign * exp(log_abs).
/// Keeps relative precision for values far outside double range and for
/// quantities like U(x) - 1 when U is within 1e-300 of 1.
struct SignedLog {
  int sign;        // -1, 0, +1
  double log_abs;  // log |value|; -inf when sign == 0

  static SignedLog from_value(double v) {
    if (v > 0) return {1, std::log(v)};
    if (v < 0) return {-1, std::log(-v)};
    return {0, -std::numeric_limits<double>::infinity()};
  }

  double to_value() const {
    if (sign == 0) return 0.0;
    return sign * std::exp(log_abs);
  }
};

namespace detail {

// log-domain a + b with signs. Magnitudes may differ by thousands of orders.
inline SignedLog slog_add(SignedLog a, SignedLog b) {
  if (a.sign == 0) return b;
  if (b.sign == 0) return a;
  if (b.log_abs > a.log_abs) std::swap(a, b);
  double d = b.log_abs - a.log_abs;  // <= 0
  if (a.sign == b.sign) return {a.sign, a.log_abs + std::log1p(std::exp(d))};
  double m = -std::expm1(d);  // 1 - e^d in (0, 1]; 0 exactly when magnitudes tie
  if (m == 0.0) return {0, -std::numeric_limits<double>::infinity()};
  return {a.sign, a.log_abs + std::log(m)};
}

inline SignedLog slog_neg(SignedLog a) { return {-a.sign, a.log_abs}; }

}  // namespace detail

/// Structural evaluation in the signed-log domain.
inline SignedLog eval_signed_log(const Expr& e, double x) {
  using detail::slog_add;
  using detail::slog_neg;
  switch (e.kind()) {
    case NodeKind::Constant: return SignedLog::from_value(e.value());
    case NodeKind::Variable: return SignedLog::from_value(x);
    case NodeKind::Pi: return {1, std::log(std::numbers::pi)};
    case NodeKind::E: return {1, 1.0};
    case NodeKind::Neg: return slog_neg(eval_signed_log(e.child(0), x));
    case NodeKind::Exp: return {1, evaluate(e.child(0), x)};
    case NodeKind::Log: {
      SignedLog c = eval_signed_log(e.child(0), x);
      if (c.sign <= 0) throw DomainError("log of non-positive value");
      return SignedLog::from_value(c.log_abs);
    }
    case NodeKind::Sqrt: {
      SignedLog c = eval_signed_log(e.child(0), x);
      if (c.sign < 0) throw DomainError("sqrt of negative value");
      if (c.sign == 0) return c;
      return {1, 0.5 * c.log_abs};
    }
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Abs:
    case NodeKind::Floor:
      return SignedLog::from_value(evaluate(e, x));
    case NodeKind::Add:
      return slog_add(eval_signed_log(e.child(0), x), eval_signed_log(e.child(1), x));
    case NodeKind::Sub:
      return slog_add(eval_signed_log(e.child(0), x), slog_neg(eval_signed_log(e.child(1), x)));
    case NodeKind::Mul: {
      SignedLog a = eval_signed_log(e.child(0), x);
      SignedLog b = eval_signed_log(e.child(1), x);
      if (a.sign == 0 || b.sign == 0)
        return {0, -std::numeric_limits<double>::infinity()};
      return {a.sign * b.sign, a.log_abs + b.log_abs};
    }
    case NodeKind::Div: {
      SignedLog a = eval_signed_log(e.child(0), x);
      SignedLog b = eval_signed_log(e.child(1), x);
      if (b.sign == 0) throw DomainError("division by zero");
      if (a.sign == 0) return a;
      return {a.sign * b.sign, a.log_abs - b.log_abs};
    }
    case NodeKind::Pow: {
      SignedLog base = eval_signed_log(e.child(0), x);
      double p = evaluate(e.child(1), x);
      if (base.sign == 0) {
        if (p > 0) return base;
        if (p == 0) return {1, 0.0};
        throw DomainError("zero raised to a negative power");
      }
      if (base.sign < 0) {
        if (!detail::is_integer_valued(p))
          throw DomainError("negative base with non-integer exponent");
        int s = (std::fmod(std::fabs(p), 2.0) < 0.5) ? 1 : -1;
        return {s, p * base.log_abs};
      }
      double la = p * base.log_abs;
      if (std::isnan(la)) la = 0.0;  // 1^inf, inf^0 style products
      return {1, la};
    }
  }
  throw std::logic_error("unreachable node kind");
}

/// log of a positive expression value; DomainError when the value is <= 0.
inline double eval_log(const Expr& e, double x) {
  SignedLog s = eval_signed_log(e, x);
  if (s.sign <= 0) throw DomainError("expression not positive");
  return s.log_abs;
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

namespace detail {

// Constructors used by the differentiator. Only exact-literal folding: the
// output is otherwise left unsimplified.
inline Expr d_add(const Expr& a, const Expr& b) {
  if (a.is_constant(0)) return b;
  if (b.is_constant(0)) return a;
  return Expr::binary(NodeKind::Add, a, b);
}

inline Expr d_sub(const Expr& a, const Expr& b) {
  if (b.is_constant(0)) return a;
  if (a.is_constant(0)) {
    if (b.kind() == NodeKind::Constant) return Expr::constant(-b.value());
    return Expr::unary(NodeKind::Neg, b);
  }
  return Expr::binary(NodeKind::Sub, a, b);
}

inline Expr d_mul(const Expr& a, const Expr& b) {
  if (a.is_constant(0) || b.is_constant(0)) return Expr::constant(0);
  if (a.is_constant(1)) return b;
  if (b.is_constant(1)) return a;
  return Expr::binary(NodeKind::Mul, a, b);
}

inline Expr d_div(const Expr& a, const Expr& b) {
  if (a.is_constant(0)) return Expr::constant(0);
  return Expr::binary(NodeKind::Div, a, b);
}

inline Expr d_neg(const Expr& a) {
  if (a.kind() == NodeKind::Constant) return Expr::constant(-a.value());
  return Expr::unary(NodeKind::Neg, a);
}

}  // namespace detail

/// Structural derivative d/dx. floor differentiates to 0 (the almost
/// everywhere derivative); abs to f/|f| * f'.
inline Expr differentiate(const Expr& e) {
  using namespace detail;
  switch (e.kind()) {
    case NodeKind::Constant:
    case NodeKind::Pi:
    case NodeKind::E:
      return Expr::constant(0);
    case NodeKind::Variable:
      return Expr::constant(1);
    case NodeKind::Neg:
      return d_neg(differentiate(e.child(0)));
    case NodeKind::Log:
      return d_div(differentiate(e.child(0)), e.child(0));
    case NodeKind::Exp:
      return d_mul(e, differentiate(e.child(0)));
    case NodeKind::Sqrt:
      return d_div(differentiate(e.child(0)), d_mul(Expr::constant(2), e));
    case NodeKind::Sin:
      return d_mul(Expr::unary(NodeKind::Cos, e.child(0)), differentiate(e.child(0)));
    case NodeKind::Cos:
      return d_neg(d_mul(Expr::unary(NodeKind::Sin, e.child(0)), differentiate(e.child(0))));
    case NodeKind::Abs:
      return d_mul(d_div(e.child(0), e), differentiate(e.child(0)));
    case NodeKind::Floor:
      return Expr::constant(0);
    case NodeKind::Add:
      return d_add(differentiate(e.child(0)), differentiate(e.child(1)));
    case NodeKind::Sub:
      return d_sub(differentiate(e.child(0)), differentiate(e.child(1)));
    case NodeKind::Mul:
      return d_add(d_mul(differentiate(e.child(0)), e.child(1)),
                   d_mul(e.child(0), differentiate(e.child(1))));
    case NodeKind::Div:
      return d_div(d_sub(d_mul(differentiate(e.child(0)), e.child(1)),
                         d_mul(e.child(0), differentiate(e.child(1)))),
                   Expr::binary(NodeKind::Pow, e.child(1), Expr::constant(2)));
    case NodeKind::Pow: {
      const Expr& f = e.child(0);
      const Expr& g = e.child(1);
      if (g.kind() == NodeKind::Constant) {
        // power rule: g * f^(g-1) * f'
        return d_mul(d_mul(g, Expr::binary(NodeKind::Pow, f, Expr::constant(g.value() - 1))),
                     differentiate(f));
      }
      // general case: f^g * (g' log f + g f'/f)
      return d_mul(e, d_add(d_mul(differentiate(g), Expr::unary(NodeKind::Log, f)),
                            d_mul(g, d_div(differentiate(f), f))));
    }
  }
  throw std::logic_error("unreachable node kind");
}

}  // namespace orderkit
