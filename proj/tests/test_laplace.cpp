#include <doctest.h>

#include <cmath>

#include "orderkit/laplace.hpp"

using namespace orderkit;

namespace {
const Grid kGrid{10.0, 2.0, 40};
const double kE = std::exp(1.0);

// independent series evaluation of E1(z) for small z
double expint_e1(double z) {
  const double gamma = 0.57721566490153286;
  double sum = -gamma - std::log(z);
  double term = 1.0;
  for (int k = 1; k <= 30; ++k) {
    term *= -z / k;
    sum -= term / k;
  }
  return sum;
}

}  // namespace

TEST_CASE("laplace_transform: closed forms") {
  for (double s : {0.5, 1.0, 2.0}) {
    CHECK(laplace_transform(parse("1"), s).value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(laplace_transform(parse("x"), s).value == doctest::Approx(1.0 / s).epsilon(1e-9));
  }

  // s int e^{-sx} log(1+x) dx = e^s E1(s)
  const double s = 0.01;
  const double expect = std::exp(s) * expint_e1(s);
  LaplaceResult r = laplace_transform(parse("log(1+x)"), s);
  CHECK(r.value == doctest::Approx(expect).epsilon(1e-8));
  CHECK(r.split_point == doctest::Approx(3000.0));

  CHECK_THROWS_AS(laplace_transform(parse("exp(x^2)"), 1.0), LaplaceDivergent);
}

TEST_CASE("laplace_transform: nonincreasing in s for nondecreasing U") {
  Expr u = parse("(log(1+x))^2");
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const double v = laplace_transform(u, s).value;
    CHECK(v <= prev * (1 + 1e-9));
    prev = v;
  }
}

TEST_CASE("tauberian_order_check: order transfers to the transform") {
  ClassVerdict v =
      tauberian_order_check(parse("(log(1+x))^2"), parse("1/log(x)"), kE, 2.0, kGrid);
  CHECK(v.member == ClassVerdict::Membership::Member);
  CHECK(std::fabs(v.order.rho - 2.0) <= 0.1);
}

TEST_CASE("tauberian_order_check: regularly varying input stays inconclusive") {
  ClassVerdict v = tauberian_order_check(parse("x"), parse("1/log(x)"), kE, 1.0, kGrid);
  CHECK(v.member == ClassVerdict::Membership::Inconclusive);
}

TEST_CASE("tauberian_order_check: non-monotone input downgraded to forward-only") {
  ClassVerdict v = tauberian_order_check(parse("2+sin(log(1+x))"), parse("1/log(x)"), kE, 0.0, kGrid);
  CHECK(v.notes.find("monotone") != std::string::npos);
}
