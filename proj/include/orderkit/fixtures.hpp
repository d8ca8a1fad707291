#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "orderkit/classes.hpp"

namespace orderkit {

/// A catalogued reference function with its normalizer and known order.
struct Fixture {
  std::string name;
  std::string expr;
  ClassId cls;
  NormKind kind;
  std::string norm_expr;  // L or b; empty for the plain log normalizer
  double anchor;          // ignored for Log and SelfNeglectingB kinds
  double rho;
  double tol;
  bool expect_converged;
  std::string note;
};

/// Built-in fixtures. Anchors are chosen so that the defining ratio is exact
/// wherever the weight admits a closed running integral.
inline const std::vector<Fixture>& builtin_fixtures() {
  static const std::vector<Fixture> fixtures = {
      {"log-pow", "(log(x))^2", ClassId::M0, NormKind::WeightedL, "1/log(x)", std::exp(1.0), 2.0,
       1e-6, true, "power of the logarithm under the reciprocal-log weight"},
      {"log-x", "log(x)", ClassId::M0, NormKind::WeightedL, "1/log(x)", std::exp(1.0), 1.0, 1e-6,
       true, "the logarithm itself; unit order under the reciprocal-log weight"},
      {"exp-pow-log", "exp(3*(log(x))^0.5)", ClassId::M0, NormKind::WeightedL,
       "0.5*(log(x))^(-0.5)", 1.0, 3.0, 1e-5, true,
       "exp of a fractional power of log; weight integrates to (log x)^(1/2)"},
      {"exp-inv-sq", "exp(5*x^(-2))", ClassId::M0Minus, NormKind::TailL, "2*x^(-2)", 1.0, 5.0,
       1e-6, true, "tends to 1 from above; tail weight integrates to x^(-2)"},
      {"exp-inv-log", "exp(-(log(x))^(-1))", ClassId::M0Minus, NormKind::TailL, "(log(x))^(-2)",
       std::exp(1.0), -1.0, 1e-6, true,
       "tends to 1 from below; tail weight integrates to 1/log x"},
      {"exp-sqrt", "exp(2*x^0.5)", ClassId::M0Plus, NormKind::WeightedL, "0.5*x^0.5", 0.0, 2.0,
       1e-3, true, "exp of a root; weight integrates to x^(1/2)"},
      {"exp-linear-15", "exp(1.5*x)", ClassId::M0Plus, NormKind::WeightedL, "x", 0.0, 1.5, 1e-6,
       true, "pure exponential against the identity weight"},
      {"exp-decay", "0.5*exp(-0.5*x)", ClassId::M1, NormKind::SelfNeglectingB, "1", 0.0, -0.5,
       1e-3, true, "exponential density; unit auxiliary scale"},
      {"normal-density", "exp(-x^2/2)/sqrt(2*pi)", ClassId::M1, NormKind::SelfNeglectingB, "1/x",
       0.0, -0.5, 1e-3, true, "standard bell density; auxiliary scale 1/x"},
      {"floor-pow", "exp(floor(x)*log(x))", ClassId::M1, NormKind::SelfNeglectingB, "1/log(x)",
       0.0, 1.0, 0.02, true, "integer-step growth; auxiliary scale 1/log x"},
      {"sin-tail", "exp(-x-0.5*sin(x))", ClassId::M1, NormKind::SelfNeglectingB, "1", 0.0, -1.0,
       1e-3, true, "tail with a bounded oscillating phase; unit auxiliary scale"},
      {"poly-log", "x^3*log(x)", ClassId::M, NormKind::Log, "", 0.0, 3.0, 0.05, true,
       "cubic with a log factor; plain order"},
      {"slow-exp", "exp(3*(log(x))^0.5)", ClassId::M, NormKind::Log, "", 0.0, 0.0, 0.05, false,
       "plain order 0 but the raw ratio converges too slowly to read off"},
  };
  return fixtures;
}

inline NormalizerSpec fixture_normalizer(const Fixture& f) {
  switch (f.kind) {
    case NormKind::Log:
      return NormalizerSpec::log_x();
    case NormKind::WeightedL:
      return NormalizerSpec::weighted(parse(f.norm_expr), f.anchor);
    case NormKind::TailL:
      return NormalizerSpec::tail(parse(f.norm_expr), f.anchor);
    case NormKind::SelfNeglectingB:
      return NormalizerSpec::self_neglecting(parse(f.norm_expr));
  }
  throw std::logic_error("unreachable fixture kind");
}

/// Runs the estimator matching the fixture's class.
inline OrderEstimate estimate_fixture(const Fixture& f, const Grid& grid = {},
                                      const QuadConfig& cfg = {}) {
  Expr u = parse(f.expr);
  switch (f.kind) {
    case NormKind::Log:
      return estimate_order_m(u, grid, cfg);
    case NormKind::WeightedL: {
      const char label = f.cls == ClassId::M0Plus ? 'B' : 'A';
      return estimate_order_weighted(u, parse(f.norm_expr), f.anchor, label, grid, cfg);
    }
    case NormKind::TailL:
      return estimate_order_tail(u, parse(f.norm_expr), f.anchor, grid, cfg);
    case NormKind::SelfNeglectingB:
      return estimate_order_sn(u, parse(f.norm_expr), grid, cfg);
  }
  throw std::logic_error("unreachable fixture kind");
}

}  // namespace orderkit
