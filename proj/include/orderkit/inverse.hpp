#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "orderkit/classes.hpp"
#include "orderkit/expr.hpp"
#include "orderkit/numerics.hpp"

namespace orderkit {

class NotBracketed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotIncreasing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function to invert numerically. Construction sample-verifies that the
/// source is strictly increasing beyond domain_start (64 geometric samples).
struct InverseFn {
  Expr source;
  double domain_start;
  double bracket_growth = 4.0;

  InverseFn(Expr src, double start) : source(std::move(src)), domain_start(start) {
    if (!(start > 0)) throw std::invalid_argument("InverseFn: domain_start must be positive");
    double prev = -std::numeric_limits<double>::infinity();
    double x = start;
    const double step = std::pow(2.0, 1.0 / 8.0);
    for (int i = 0; i < 64; ++i, x *= step) {
      SignedLog s = eval_signed_log(source, x);
      if (s.sign <= 0) throw NonPositiveError("InverseFn: source must be positive");
      if (!(s.log_abs > prev))
        throw NotIncreasing("InverseFn: source not strictly increasing past domain_start");
      prev = s.log_abs;
    }
  }
};

/// Solves U(x) = y by bracket expansion and bisection, operating on log U
/// throughout so that sources spanning hundreds of orders are safe.
inline double numeric_inverse(const InverseFn& inv, double y, double tol = 1e-10) {
  if (!(y > 0)) throw std::invalid_argument("numeric_inverse: y must be positive");
  const double target = std::log(y);
  auto g = [&](double x) {
    SignedLog s = eval_signed_log(inv.source, x);
    if (s.sign <= 0) throw NonPositiveError("numeric_inverse: source must be positive");
    return s.log_abs - target;
  };
  double lo = inv.domain_start;
  double g_lo = g(lo);
  if (g_lo > tol) throw NotBracketed("numeric_inverse: y below U(domain_start)");
  if (std::fabs(g_lo) <= tol * 0.01) return lo;
  double hi = lo;
  double g_hi = g_lo;
  for (int i = 0; i < 600 && g_hi < 0; ++i) {
    hi *= inv.bracket_growth;
    if (hi > 1e300) throw NotBracketed("numeric_inverse: bracket expansion exhausted");
    g_hi = g(hi);
  }
  if (g_hi < 0) throw NotBracketed("numeric_inverse: no upper bracket found");
  // bisection in log x
  double llo = std::log(lo), lhi = std::log(hi);
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (llo + lhi);
    const double gm = g(std::exp(mid));
    if (std::fabs(gm) <= tol) return std::exp(mid);
    if (gm < 0)
      llo = mid;
    else
      lhi = mid;
    if (lhi - llo < 4e-16 * std::max(1.0, std::fabs(lhi))) break;
  }
  return std::exp(0.5 * (llo + lhi));
}

/// Order transfer to the inverse function: when b U'/U -> rho > 0, the
/// inverse V has weighted order 1/rho against L(y) = b(V(y))/V(y). The
/// hypothesis failing makes the verdict inconclusive rather than negative.
inline ClassVerdict inverse_order_check(const Expr& U, const Expr& b, double rho,
                                        const Grid& grid = {}, const QuadConfig& cfg = {},
                                        double tol = 0.05) {
  if (!(rho > 0)) throw std::invalid_argument("inverse_order_check: rho must be positive");
  ClassVerdict verdict;
  LimitEstimate crit = check_derivative_criterion(U, NormalizerSpec::self_neglecting(b), grid, cfg);
  const double agree = std::max(2.0 * crit.uncertainty, 5e-3);
  if (!std::isfinite(crit.value) || std::fabs(crit.value - rho) > agree) {
    verdict.member = ClassVerdict::Membership::Inconclusive;
    verdict.notes = "hypothesis failed: b U'/U did not converge to rho";
    return verdict;
  }

  const std::vector<double> ys = grid.points();
  // find a start below the preimage of the smallest target value
  double start = 1.0;
  {
    const double target = std::log(ys.front());
    for (int i = 0; i < 200; ++i) {
      SignedLog s = eval_signed_log(U, start);
      if (s.sign > 0 && s.log_abs < target) break;
      start *= 0.5;
      if (start < 1e-12) break;
    }
  }
  InverseFn inv(U, start);

  std::vector<double> log_v(ys.size());
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const double v = numeric_inverse(inv, ys[k], 1e-12);
    log_v[k] = std::log(v);
  }
  // derived weight L(y) = b(V(y))/V(y), evaluated through the inverse
  auto weight_over_t = [&](double t) {
    const double v = numeric_inverse(inv, t, 1e-12);
    return std::exp(detail::log_f(b, v) - std::log(v)) / t;
  };
  Grid tail_grid = grid;
  auto h_table = cumulative_integral(weight_over_t, ys.front(), tail_grid, cfg);
  std::vector<double> h(ys.size());
  for (std::size_t k = 0; k < ys.size(); ++k) h[k] = h_table[k].second;

  NormalizerSpec norm;  // derived weight has no closed expression
  norm.kind = NormKind::WeightedL;
  norm.anchor = ys.front();
  verdict.order = detail::estimate_from_tables(ys, log_v, h, ClassId::M0, norm, {});
  verdict.characterization_passed = std::fabs(verdict.order.rho - 1.0 / rho) <= tol;
  if (!std::isfinite(verdict.order.rho) || verdict.order.limit.uncertainty > 0.5) {
    verdict.member = ClassVerdict::Membership::Inconclusive;
    verdict.notes = "inverse order did not settle";
  } else {
    verdict.member = verdict.characterization_passed ? ClassVerdict::Membership::Member
                                                     : ClassVerdict::Membership::NonMember;
    if (!verdict.characterization_passed)
      verdict.notes = "inverse order " + detail::format_double(verdict.order.rho) +
                      " deviates from " + detail::format_double(1.0 / rho);
  }
  return verdict;
}

}  // namespace orderkit
