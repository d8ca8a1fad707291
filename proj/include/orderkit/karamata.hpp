#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "orderkit/classes.hpp"
#include "orderkit/expr.hpp"
#include "orderkit/numerics.hpp"

namespace orderkit {

class AlphaMinusOne : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class GammaSign { Gamma, GammaMinus };

namespace detail {

// The shift x + y b(x) must move x by well over one ulp, or the quotient
// degenerates to 1 in floating point.
inline bool shift_resolvable(double x, double shift) {
  return std::fabs(shift) >= 1.1e-10 * x;
}

}  // namespace detail

/// x^{-1-alpha} int_a^x t^alpha U(t) dt for alpha > -1, or the tail form
/// x^{-1-alpha} int_x^inf t^alpha U(t) dt for alpha < -1. alpha = -1 is
/// rejected outright.
inline double karamata_transform(const Expr& U, double alpha, double a, double x,
                                 const QuadConfig& cfg = {}) {
  if (std::fabs(alpha + 1.0) < 1e-9)
    throw AlphaMinusOne("karamata transform undefined at alpha = -1");
  auto logf = [&](double t) { return alpha * std::log(t) + detail::log_f(U, t); };
  double log_integral;
  if (alpha > -1.0) {
    log_integral = log_integrate_finite(logf, a, x, cfg);
  } else {
    auto tail = log_integrate_to_infinity(logf, x, cfg);
    if (!tail) throw DomainError("karamata transform: tail integral divergent");
    log_integral = *tail;
  }
  return std::exp(log_integral - (1.0 + alpha) * std::log(x));
}

namespace detail {

inline std::vector<double> karamata_log_table(const Expr& U, double alpha, double a,
                                              const Grid& grid, const QuadConfig& cfg) {
  auto logf = [&](double t) { return alpha * std::log(t) + log_f(U, t); };
  const std::vector<double> xs = grid.points();
  std::vector<double> logi;
  if (alpha > -1.0)
    logi = log_cumulative_on_grid(logf, a, grid, cfg);
  else
    logi = log_tail_on_grid(logf, grid, cfg);
  std::vector<double> out(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k)
    out[k] = logi[k] - (1.0 + alpha) * std::log(xs[k]);
  return out;
}

}  // namespace detail

/// Order preservation under the Karamata transform: the transform of a
/// weighted-order-rho function keeps order rho.
inline ClassVerdict verify_karamata_preservation(const Expr& U, const Expr& L, double a,
                                                 double alpha, const Grid& grid = {},
                                                 const QuadConfig& cfg = {}, double tol = 0.05) {
  if (std::fabs(alpha + 1.0) < 1e-9)
    throw AlphaMinusOne("karamata transform undefined at alpha = -1");
  ClassVerdict verdict;
  OrderEstimate base = estimate_order_weighted(U, L, a, 'A', grid, cfg);
  NormalizerSpec norm = NormalizerSpec::weighted(L, a);
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  std::vector<double> logt = detail::karamata_log_table(U, alpha, a, grid, cfg);
  verdict.order = detail::estimate_from_tables(nt.x, logt, nt.h, base.class_id, norm, nt.warnings);
  const double diff = std::fabs(verdict.order.rho - base.rho);
  verdict.characterization_passed = diff <= tol;
  if (!std::isfinite(verdict.order.rho)) {
    verdict.member = ClassVerdict::Membership::Inconclusive;
    verdict.notes = "transform order did not converge";
  } else if (verdict.characterization_passed) {
    verdict.member = ClassVerdict::Membership::Member;
  } else {
    verdict.member = ClassVerdict::Membership::NonMember;
    verdict.notes = "transform order " + detail::format_double(verdict.order.rho) +
                    " deviates from " + detail::format_double(base.rho);
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// Self-neglecting and Gamma membership
// ---------------------------------------------------------------------------

inline const std::vector<double>& default_y_grid() {
  static const std::vector<double> ys = {-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0};
  return ys;
}

/// Per-y ratio table against the target shift behaviour: 1 for
/// self-neglecting b, e^y for Gamma, e^{-y} for Gamma-minus.
struct GammaVerdict {
  struct Row {
    double y;
    LimitEstimate ratio;
    double target;
    bool ok;
  };
  std::vector<Row> rows;
  bool passed = false;
  LimitEstimate b_over_x;  // filled by the self-neglecting check
  std::string notes;
};

/// b is self-neglecting when b(x)/x -> 0 and b(x + y b(x))/b(x) -> 1 for each
/// y; local uniformity is approximated by the finite y grid.
inline GammaVerdict is_self_neglecting(const Expr& b, const Grid& grid = {},
                                       const std::vector<double>& y_grid = default_y_grid(),
                                       const QuadConfig& cfg = {}, double tol = 1e-2) {
  (void)cfg;
  GammaVerdict out;
  const std::vector<double> xs = grid.points();
  std::vector<double> bv, b_over_x;
  for (double x : xs) {
    SignedLog s = eval_signed_log(b, x);
    if (s.sign <= 0) throw NonPositiveError("b not positive at x=" + detail::format_double(x));
    bv.push_back(s.to_value());
    b_over_x.push_back(std::exp(s.log_abs - std::log(x)));
  }
  out.b_over_x = extrapolate_limit(b_over_x);
  const bool vanishes = tends_to_zero(b_over_x) || std::fabs(out.b_over_x.value) <= 0.02;
  if (!vanishes) out.notes = "b(x)/x does not tend to 0";

  bool all_ok = true;
  for (double y : y_grid) {
    std::vector<double> ratio;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (!detail::shift_resolvable(xs[k], y * bv[k])) continue;
      const double shifted = xs[k] + y * bv[k];
      if (!(shifted > 0)) continue;
      try {
        ratio.push_back(std::exp(detail::log_f(b, shifted) - std::log(bv[k])));
      } catch (const DomainError&) {
        continue;  // small-x points where the shift leaves the domain
      }
    }
    GammaVerdict::Row row{y, {}, 1.0, false};
    if (ratio.size() >= 8) {
      row.ratio = extrapolate_limit(ratio);
      row.ok = std::fabs(row.ratio.value - 1.0) <= tol;
    } else {
      out.notes = "too few abscissae resolve the shift x + y b(x)";
    }
    all_ok = all_ok && row.ok;
    out.rows.push_back(row);
  }
  out.passed = vanishes && all_ok;
  return out;
}

/// f(x + y b(x))/f(x) -> e^y (Gamma) or e^{-y} (Gamma-minus) per y.
inline GammaVerdict gamma_ratio_check(const Expr& f, const Expr& b, GammaSign sign,
                                      const Grid& grid = {},
                                      const std::vector<double>& y_grid = default_y_grid(),
                                      const QuadConfig& cfg = {}, double tol = 1e-2) {
  GammaVerdict sn = is_self_neglecting(b, grid, y_grid, cfg, tol);
  if (!sn.passed) throw BNotSuitable("auxiliary b is not self-neglecting");
  GammaVerdict out;
  const std::vector<double> xs = grid.points();
  bool all_ok = true;
  for (double y : y_grid) {
    std::vector<double> ratio;
    for (double x : xs) {
      const double bx = std::exp(detail::log_f(b, x));
      if (!detail::shift_resolvable(x, y * bx)) continue;
      const double shifted = x + y * bx;
      if (!(shifted > 0)) continue;
      try {
        ratio.push_back(std::exp(detail::log_f(f, shifted) - detail::log_f(f, x)));
      } catch (const DomainError&) {
        continue;
      }
    }
    const double target = sign == GammaSign::Gamma ? std::exp(y) : std::exp(-y);
    GammaVerdict::Row row{y, {}, target, false};
    if (ratio.size() >= 8) {
      row.ratio = extrapolate_limit(ratio);
      row.ok = std::fabs(row.ratio.value - target) <= tol;
    } else {
      out.notes = "too few abscissae resolve the shift x + y b(x)";
    }
    all_ok = all_ok && row.ok;
    out.rows.push_back(row);
  }
  out.passed = all_ok;
  return out;
}

/// int_a^x f ~ b(x) f(x) for Gamma members; int_x^inf f ~ b(x) f(x) for
/// Gamma-minus. Returns the extrapolated ratio of the two sides.
inline LimitEstimate gamma_integral_equivalence(const Expr& f, const Expr& b, double a,
                                                GammaSign sign, const Grid& grid = {},
                                                const QuadConfig& cfg = {}) {
  const std::vector<double> xs = grid.points();
  auto logf = [&](double t) { return detail::log_f(f, t); };
  std::vector<double> logi;
  if (sign == GammaSign::Gamma)
    logi = log_cumulative_on_grid(logf, a, grid, cfg);
  else
    logi = log_tail_on_grid(logf, grid, cfg);
  std::vector<double> ratio(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k)
    ratio[k] = std::exp(logi[k] - detail::log_f(b, xs[k]) - detail::log_f(f, xs[k]));
  return extrapolate_limit(ratio);
}

// ---------------------------------------------------------------------------
// W-function analysis and integrals of rapidly scaled functions
// ---------------------------------------------------------------------------

/// Behaviour of W(x) = x / L(x) under a growing weight: W' -> alpha >= 0
/// predicts that running integrals shift the order by alpha, W' -> infinity
/// collapses it to 0.
struct WAnalysis {
  Expr w;
  Expr w_prime;
  LimitEstimate wprime_limit;
  bool finite_alpha = false;
  double alpha = 0.0;
  ClassId predicted_class = ClassId::M0Plus;
  double predicted_order = 0.0;
  std::string note;
};

inline WAnalysis analyze_W(const Expr& L, double rho, const Grid& grid = {},
                           const QuadConfig& cfg = {}) {
  (void)cfg;
  WAnalysis out{Expr::binary(NodeKind::Div, Expr::variable(), L),
                Expr::constant(0),
                {},
                false,
                0.0,
                ClassId::M0Plus,
                0.0,
                {}};
  out.w_prime = differentiate(out.w);
  const std::vector<double> xs = grid.points();
  std::vector<double> wp, beta_seq;
  for (double x : xs) {
    wp.push_back(evaluate(out.w_prime, x));
    beta_seq.push_back(x * wp.back() / evaluate(out.w, x));
  }
  out.wprime_limit = extrapolate_limit(wp);
  if (tends_to_infinity(wp) || (std::isinf(out.wprime_limit.value) && out.wprime_limit.value > 0)) {
    out.finite_alpha = false;
    out.predicted_order = 0.0;
  } else {
    out.finite_alpha = true;
    out.alpha = std::max(0.0, out.wprime_limit.value);
    out.predicted_order = rho + out.alpha;
  }
  LimitEstimate beta = extrapolate_limit(beta_seq);
  if (beta.converged && (beta.value <= 0.02 || beta.value >= 0.98))
    out.note = "x W'/W tends to " + detail::format_double(beta.value) +
               ", outside (0,1); W is not regularly varying of positive index below 1";
  return out;
}

/// Ratio int_a^x U / (W(x) U(x) / c) with c = rho + alpha; tends to 1 when
/// the W analysis applies.
inline LimitEstimate integral_asymptotic_ratio(const Expr& U, const Expr& L, double c, double a,
                                               const Grid& grid = {}, const QuadConfig& cfg = {}) {
  const std::vector<double> xs = grid.points();
  auto logf = [&](double t) { return detail::log_f(U, t); };
  std::vector<double> logi = log_cumulative_on_grid(logf, a, grid, cfg);
  std::vector<double> ratio(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double log_w = std::log(xs[k]) - detail::log_f(L, xs[k]);
    ratio[k] = std::exp(logi[k] - log_w - detail::log_f(U, xs[k]) + std::log(c));
  }
  return extrapolate_limit(ratio);
}

/// Integrates U along the grid (running integral for positive order, tail
/// integral for negative) and re-runs the matching order estimator on the
/// table. The rapid-scale class keeps its order; a weighted class shifts by
/// the W-analysis alpha.
inline ClassVerdict integrate_and_classify(const Expr& U, const NormalizerSpec& norm, double rho,
                                           double a, const Grid& grid = {},
                                           const QuadConfig& cfg = {}, double tol = 0.05) {
  ClassVerdict verdict;
  const std::vector<double> xs = grid.points();
  auto logf = [&](double t) { return detail::log_f(U, t); };
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);

  double expected = 0.0;
  std::vector<double> logi;
  if (norm.kind == NormKind::SelfNeglectingB) {
    if (rho == 0.0)
      throw std::invalid_argument("integrate_and_classify: sign of rho selects the integral form");
    if (rho > 0) {
      logi = log_cumulative_on_grid(logf, a, grid, cfg);
    } else {
      logi = log_tail_on_grid(logf, grid, cfg);
    }
    expected = rho;
  } else if (norm.kind == NormKind::WeightedL) {
    WAnalysis wa = analyze_W(*norm.expr, rho, grid, cfg);
    logi = log_cumulative_on_grid(logf, a, grid, cfg);
    expected = wa.finite_alpha ? rho + wa.alpha : 0.0;
    verdict.notes = wa.finite_alpha
                        ? "W' -> " + detail::format_double(wa.alpha)
                        : "W' diverges; integral order collapses to 0";
  } else {
    throw std::invalid_argument("integrate_and_classify: weighted or self-neglecting normalizer only");
  }

  verdict.order = detail::estimate_from_tables(xs, logi, nt.h, detail::class_for_kind(norm.kind),
                                               norm, nt.warnings);
  if (!std::isfinite(verdict.order.rho) || !(verdict.order.limit.uncertainty < 0.5)) {
    verdict.member = ClassVerdict::Membership::Inconclusive;
    verdict.notes += (verdict.notes.empty() ? "" : "; ");
    verdict.notes += "integral order did not settle within the grid";
    return verdict;
  }
  verdict.characterization_passed = std::fabs(verdict.order.rho - expected) <= tol;
  verdict.member = verdict.characterization_passed ? ClassVerdict::Membership::Member
                                                   : ClassVerdict::Membership::NonMember;
  if (!verdict.characterization_passed) {
    verdict.notes += (verdict.notes.empty() ? "" : "; ");
    verdict.notes += "integral order " + detail::format_double(verdict.order.rho) +
                     " deviates from expected " + detail::format_double(expected);
  }
  return verdict;
}

}  // namespace orderkit
