#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "orderkit/expr.hpp"

using namespace orderkit;

TEST_CASE("parse: grammar basics") {
  Expr e = parse("exp(2*x^0.5)");
  CHECK(e.kind() == NodeKind::Exp);
  Expr inner = e.child(0);
  CHECK(inner.kind() == NodeKind::Mul);
  CHECK(inner.child(0).value() == 2.0);
  CHECK(inner.child(1).kind() == NodeKind::Pow);

  Expr f = parse("(log(x))^2");
  CHECK(f.kind() == NodeKind::Pow);
  CHECK(f.child(0).kind() == NodeKind::Log);
  CHECK(f.child(1).value() == 2.0);
}

TEST_CASE("parse: unary minus binds looser than ^") {
  Expr e = parse("-x^2");
  CHECK(e.kind() == NodeKind::Neg);
  CHECK(e.child(0).kind() == NodeKind::Pow);

  // and ^ is right associative
  Expr f = parse("x^2^3");
  CHECK(f.kind() == NodeKind::Pow);
  CHECK(f.child(1).kind() == NodeKind::Pow);
}

TEST_CASE("parse: errors carry position and token") {
  CHECK_THROWS_AS(parse("2*(3"), ParseError);
  try {
    parse("2*(3");
  } catch (const ParseError& pe) {
    CHECK(pe.position() == 4);
  }
  try {
    parse("2*foo(x)");
    FAIL("expected ParseError");
  } catch (const ParseError& pe) {
    CHECK(pe.position() == 2);
    CHECK(pe.token() == "foo");
  }
  CHECK_THROWS_AS(parse("log(x, 2)"), ParseError);
  CHECK_THROWS_AS(parse("log x"), ParseError);
  CHECK_THROWS_AS(parse("x y"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("evaluate: reference points") {
  CHECK(evaluate(parse("exp(2*x)"), 0.0) == 1.0);
  CHECK(evaluate(parse("(log(x))^2"), std::exp(3.0)) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK_THROWS_AS(evaluate(parse("log(x)"), -1.0), DomainError);
  CHECK_THROWS_AS(evaluate(parse("1/x"), 0.0), DomainError);
  CHECK_THROWS_AS(evaluate(parse("x^(-1)"), 0.0), DomainError);
  CHECK_THROWS_AS(evaluate(parse("sqrt(x)"), -4.0), DomainError);
  CHECK_THROWS_AS(evaluate(parse("x^0.5"), -4.0), DomainError);
  CHECK(evaluate(parse("pi"), 0.0) == doctest::Approx(3.14159265358979).epsilon(1e-14));
  CHECK(evaluate(parse("floor(x)"), 2.7) == 2.0);
  CHECK(evaluate(parse("abs(x)"), -2.5) == 2.5);
}

TEST_CASE("signed-log evaluation matches plain evaluation in range") {
  std::vector<std::string> exprs = {
      "exp(2*x^0.5)", "(log(x))^2", "x^3*log(x)", "1+3*x^(-2)",
      "exp(-x^2/2)/sqrt(2*pi)", "x/log(x)", "2*x^(-2)", "sin(x)+2",
  };
  for (const auto& s : exprs) {
    Expr e = parse(s);
    for (double x : {2.0, 5.0, 17.3, 120.0}) {
      const double direct = evaluate(e, x);
      const SignedLog sl = eval_signed_log(e, x);
      CHECK(sl.to_value() == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("signed-log evaluation keeps precision near cancellation") {
  // U - 1 for U = 1 + 3 x^-2 at large x: plain doubles lose everything.
  Expr u_minus_1 = parse("(1+3*x^(-2))-1");
  const double x = 1e12;
  SignedLog sl = eval_signed_log(u_minus_1, x);
  CHECK(sl.sign == 1);
  CHECK(sl.log_abs == doctest::Approx(std::log(3.0) - 2 * std::log(x)).epsilon(1e-9));

  // and far outside double range
  Expr big = parse("exp(2*x^0.5)");
  SignedLog sb = eval_signed_log(big, 1e12);
  CHECK(sb.sign == 1);
  CHECK(sb.log_abs == doctest::Approx(2e6).epsilon(1e-12));
}

TEST_CASE("differentiate: structural rules") {
  CHECK(differentiate(parse("x^2")).str() == "2*x^1");
  CHECK(differentiate(parse("floor(x)")).str() == "0");
  Expr d = differentiate(parse("exp(2*x^0.5)"));
  // derivative of exp(rho x^alpha), checked against central differences
  for (double x : {2.0, 10.0, 100.0}) {
    const double h = x * 1e-6;
    Expr u = parse("exp(2*x^0.5)");
    const double fd = (evaluate(u, x + h) - evaluate(u, x - h)) / (2 * h);
    CHECK(evaluate(d, x) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("differentiate: finite-difference sweep over fixture expressions") {
  std::vector<std::string> exprs = {
      "(log(x))^2",      "exp(2*x^0.5)",      "exp(5*x^(-2))", "x^3*log(x)",
      "exp(-x^2/2)/sqrt(2*pi)", "x/log(x)",   "exp(0.01*x^2+cos(x))", "sqrt(x)+sin(x)",
      "abs(x-10.5)",     "exp(floor(x)*log(x))",
  };
  for (const auto& s : exprs) {
    Expr e = parse(s);
    Expr de = differentiate(e);
    const bool has_floor = s.find("floor") != std::string::npos;
    const bool has_abs = s.find("abs") != std::string::npos;
    for (double x : {2.3, 4.7, 9.2, 20.6, 41.9}) {
      if (has_floor && std::fabs(x - std::nearbyint(x)) < 0.5) continue;
      if (has_abs && std::fabs(x - 10.5) < 0.6) continue;
      const double h = x * 1e-6;
      const double fd = (evaluate(e, x + h) - evaluate(e, x - h)) / (2 * h);
      const double sym = evaluate(de, x);
      const double scale = std::max(1.0, std::fabs(fd));
      CHECK(std::fabs(sym - fd) / scale <= 1e-5);
    }
  }
}

namespace {

Expr random_tree(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> leaf_pick(0, 4);
  if (depth <= 0) {
    switch (leaf_pick(rng)) {
      case 0: return Expr::variable();
      case 1: return Expr::pi();
      case 2: return Expr::e();
      case 3: return Expr::constant(std::uniform_real_distribution<double>(0.25, 5.0)(rng));
      default: return Expr::constant(-2.0);
    }
  }
  std::uniform_int_distribution<int> pick(0, 12);
  switch (pick(rng)) {
    case 0: return Expr::unary(NodeKind::Neg, random_tree(rng, depth - 1));
    case 1: return Expr::unary(NodeKind::Log, random_tree(rng, depth - 1));
    case 2: return Expr::unary(NodeKind::Exp, random_tree(rng, depth - 1));
    case 3: return Expr::unary(NodeKind::Sqrt, random_tree(rng, depth - 1));
    case 4: return Expr::unary(NodeKind::Sin, random_tree(rng, depth - 1));
    case 5: return Expr::unary(NodeKind::Cos, random_tree(rng, depth - 1));
    case 6: return Expr::unary(NodeKind::Abs, random_tree(rng, depth - 1));
    case 7: return Expr::unary(NodeKind::Floor, random_tree(rng, depth - 1));
    case 8: return Expr::binary(NodeKind::Add, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 9: return Expr::binary(NodeKind::Sub, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 10: return Expr::binary(NodeKind::Mul, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 11: return Expr::binary(NodeKind::Div, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    default: return Expr::binary(NodeKind::Pow, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
  }
}

}  // namespace

TEST_CASE("print/parse round trip on random trees") {
  std::mt19937 rng(20240817);
  std::uniform_int_distribution<int> depth_pick(0, 6);
  for (int i = 0; i < 300; ++i) {
    Expr t = random_tree(rng, depth_pick(rng));
    std::string s = t.str();
    CAPTURE(s);
    Expr back = parse(s);
    CHECK(back.identical(t));
  }
}

TEST_CASE("derivatives of derivatives stay well formed") {
  Expr e = parse("exp(2*x^0.5)*log(x)");
  Expr d2 = differentiate(differentiate(e));
  CHECK(std::isfinite(evaluate(d2, 3.0)));
}
