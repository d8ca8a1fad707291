#include <doctest.h>

#include <cmath>
#include <random>

#include "orderkit/inverse.hpp"

using namespace orderkit;

namespace {
const Grid kGrid{10.0, 2.0, 40};
}  // namespace

TEST_CASE("numeric_inverse: reference solves") {
  InverseFn exp2(parse("exp(2*x)"), 0.25);
  CHECK(numeric_inverse(exp2, std::exp(6.0), 1e-12) == doctest::Approx(3.0).epsilon(1e-10));

  InverseFn sq(parse("x^2"), 0.5);
  CHECK(numeric_inverse(sq, 49.0, 1e-12) == doctest::Approx(7.0).epsilon(1e-10));

  InverseFn steep(parse("exp(x^1.5)"), 0.5);
  const double y = std::exp(std::pow(20.0, 1.5));
  CHECK(numeric_inverse(steep, y, 1e-12) == doctest::Approx(20.0).epsilon(1e-8));

  CHECK_THROWS_AS(numeric_inverse(exp2, 1e-9, 1e-12), NotBracketed);
  InverseFn slow(parse("log(x)"), 2.0);
  CHECK_THROWS_AS(numeric_inverse(slow, 1e3, 1e-12), NotBracketed);
  CHECK_THROWS_AS(InverseFn(parse("1/x"), 1.0), NotIncreasing);
}

TEST_CASE("numeric_inverse: random round trips") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> pick_log(0.0, 20.0);
  InverseFn inv(parse("exp(2*x)"), 0.25);
  for (int i = 0; i < 100; ++i) {
    const double y = std::exp(pick_log(rng) + 1.0);
    const double x = numeric_inverse(inv, y, 1e-12);
    CHECK(std::fabs(evaluate(parse("exp(2*x)"), x) - y) <= 1e-8 * std::max(1.0, y));
  }
}

TEST_CASE("inverse_order_check: exp(2x) with unit auxiliary") {
  ClassVerdict v = inverse_order_check(parse("exp(2*x)"), parse("1"), 2.0, kGrid);
  CHECK(v.member == ClassVerdict::Membership::Member);
  CHECK(std::fabs(v.order.rho - 0.5) <= 0.05);
}

TEST_CASE("inverse_order_check: exp(x^2) with b = 1/(2x)") {
  ClassVerdict v = inverse_order_check(parse("exp(x^2)"), parse("1/(2*x)"), 1.0, kGrid);
  CHECK(v.member == ClassVerdict::Membership::Member);
  CHECK(std::fabs(v.order.rho - 1.0) <= 0.05);
}

TEST_CASE("inverse_order_check: misdeclared rho is inconclusive") {
  ClassVerdict v = inverse_order_check(parse("exp(2*x)"), parse("1"), 3.0, kGrid);
  CHECK(v.member == ClassVerdict::Membership::Inconclusive);
  CHECK(v.notes.find("hypothesis") != std::string::npos);
}

TEST_CASE("derived weight identities") {
  // L(U(x)) = b(x)/x and the derived weight tends to 0
  Expr u = parse("exp(2*x)");
  InverseFn inv(u, 0.25);
  auto L_at = [&](double y) {
    const double v = numeric_inverse(inv, y, 1e-13);
    return evaluate(parse("1"), v) / v;  // b = 1
  };
  for (double x : {2.0, 5.0, 9.0, 14.0}) {
    const double y = std::exp(2.0 * x);
    CHECK(L_at(y) == doctest::Approx(1.0 / x).epsilon(1e-8));
  }
  double prev = 1e300;
  for (double y : kGrid.points()) {
    const double l = L_at(y);
    CHECK(l < prev);
    prev = l;
  }
  CHECK(prev <= 1.0 / 14.0);
}
