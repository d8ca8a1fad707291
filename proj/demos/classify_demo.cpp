// Classifies a couple of reference functions and prints the estimates.
#include <cstdio>

#include "orderkit/orderkit.hpp"

int main() {
  using namespace orderkit;
  Grid grid{10.0, 2.0, 40};

  Expr u = parse("(log(x))^2");
  Expr l = parse("1/log(x)");
  AssumptionVerdict a = check_assumption(l, std::exp(1.0), grid);
  OrderEstimate est = estimate_order_weighted(u, l, std::exp(1.0), a.label, grid);
  std::printf("U = (log x)^2 against the reciprocal-log weight\n");
  std::printf("  assumption %c, order %.9g (converged: %s)\n", a.label, est.rho,
              est.limit.converged ? "yes" : "no");

  ClassVerdict cv = characterize(u, est.normalizer, est.rho, 0.5, grid);
  std::printf("  sandwich at eps = 0.5: %s, holds from x = %.4g\n",
              cv.characterization_passed ? "passed" : "failed",
              cv.x_epsilon.value_or(-1.0));

  OrderEstimate sn = estimate_order_sn(parse("exp(-x^2/2)/sqrt(2*pi)"), parse("1/x"), grid);
  std::printf("bell density against the 1/x auxiliary scale: order %.6g\n", sn.rho);
  return 0;
}
