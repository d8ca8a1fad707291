#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "orderkit/classes.hpp"
#include "orderkit/expr.hpp"
#include "orderkit/numerics.hpp"

namespace orderkit {

class LaplaceDivergent : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// s int_0^inf e^{-sx} U(x) dx, split at x = 30/s: the head carries all but
/// an e^{-30} sliver of the mass for subexponential U.
struct LaplaceResult {
  double s = 0.0;
  double value = 0.0;
  double split_point = 0.0;
  double error_estimate = 0.0;
};

inline LaplaceResult laplace_transform(const Expr& U, double s, const QuadConfig& cfg = {}) {
  if (!(s > 0)) throw std::invalid_argument("laplace_transform: s must be positive");
  const double split = 30.0 / s;
  auto logf = [&](double t) {
    SignedLog u = eval_signed_log(U, t);
    if (u.sign < 0) throw DomainError("laplace_transform: U must be nonnegative");
    if (u.sign == 0) return -std::numeric_limits<double>::infinity();
    return -s * t + u.log_abs;
  };

  const double head = log_integrate_finite(logf, 0.0, split, cfg);
  double total = head;
  std::optional<double> tail;
  try {
    // the unscaled tail integral runs up to ~1/s^2 before the factor s is
    // applied, so the generic divergence bound does not apply here
    QuadConfig tail_cfg = cfg;
    tail_cfg.divergence_bound = 1e290;
    tail = log_integrate_to_infinity(logf, split, tail_cfg);
  } catch (const DepthExceeded&) {
    throw LaplaceDivergent("laplace transform: tail did not resolve");
  }
  if (!tail) throw LaplaceDivergent("laplace transform diverges");
  total = logaddexp(total, *tail);

  LaplaceResult out;
  out.s = s;
  out.split_point = split;
  out.value = s * std::exp(total);
  if (!std::isfinite(out.value)) throw LaplaceDivergent("laplace transform overflows");
  out.error_estimate = std::max(cfg.abs_tol, cfg.rel_tol * out.value) * 4.0;
  return out;
}

/// Order transfer to the transform: U of weighted order rho implies
/// Uhat(1/x) has the same weighted order. The equivalence needs U monotone;
/// otherwise only the forward direction is claimed and noted.
inline ClassVerdict tauberian_order_check(const Expr& U, const Expr& L, double a, double rho,
                                          const Grid& grid = {}, const QuadConfig& cfg = {},
                                          double tol = 0.1) {
  ClassVerdict verdict;
  const std::vector<double> xs = grid.points();

  bool monotone = true;
  double prev_log = -std::numeric_limits<double>::infinity();
  for (double x : xs) {
    for (double t : {x, 1.5 * x}) {
      SignedLog u = eval_signed_log(U, t);
      if (u.sign <= 0) throw NonPositiveError("tauberian check: U must be positive");
      if (u.log_abs < prev_log - 1e-9) monotone = false;
      prev_log = std::max(prev_log, u.log_abs);
    }
  }
  if (!monotone) verdict.notes = "U not monotone on the grid; forward direction only";

  std::vector<double> log_hat(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    LaplaceResult r = laplace_transform(U, 1.0 / xs[k], cfg);
    if (!(r.value > 0)) throw LaplaceDivergent("transform vanished");
    log_hat[k] = std::log(r.value);
  }
  NormalizerSpec norm = NormalizerSpec::weighted(L, a);
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  verdict.order =
      detail::estimate_from_tables(nt.x, log_hat, nt.h, ClassId::M0, norm, nt.warnings);

  if (!std::isfinite(verdict.order.rho) || !verdict.order.limit.converged) {
    verdict.member = ClassVerdict::Membership::Inconclusive;
    verdict.notes += (verdict.notes.empty() ? "" : "; ");
    verdict.notes += "transform order did not converge";
    return verdict;
  }
  verdict.characterization_passed = std::fabs(verdict.order.rho - rho) <= tol;
  verdict.member = verdict.characterization_passed ? ClassVerdict::Membership::Member
                                                   : ClassVerdict::Membership::NonMember;
  return verdict;
}

}  // namespace orderkit
