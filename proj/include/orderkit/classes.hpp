#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "orderkit/expr.hpp"
#include "orderkit/numerics.hpp"

namespace orderkit {

enum class ClassId { M, M0, M0Minus, M0Plus, M1 };

inline const char* class_id_name(ClassId c) {
  switch (c) {
    case ClassId::M: return "m";
    case ClassId::M0: return "m0";
    case ClassId::M0Minus: return "m0minus";
    case ClassId::M0Plus: return "m0plus";
    case ClassId::M1: return "m1";
  }
  return "?";
}

enum class NormKind { Log, WeightedL, TailL, SelfNeglectingB };

/// The normalizing data of an order estimate: which denominator family is in
/// use, the weight expression (L or b), and the anchor of the running
/// integral.
struct NormalizerSpec {
  NormKind kind = NormKind::Log;
  std::optional<Expr> expr;
  double anchor = 0.0;

  static NormalizerSpec log_x() { return {NormKind::Log, std::nullopt, 0.0}; }
  static NormalizerSpec weighted(Expr L, double a) { return {NormKind::WeightedL, std::move(L), a}; }
  static NormalizerSpec tail(Expr L, double a) { return {NormKind::TailL, std::move(L), a}; }
  static NormalizerSpec self_neglecting(Expr b) {
    return {NormKind::SelfNeglectingB, std::move(b), 0.0};
  }
};

class NonPositiveError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NormalizerDegenerate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TailVanished : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BNotSuitable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DerivativeVanishes : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SandwichNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Inconclusive : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Normalizer tabulation
// ---------------------------------------------------------------------------

namespace detail {

// Probe the anchor; if the weight is not evaluable there, nudge it upward to
// the first usable point and record a warning.
inline double effective_anchor(const Expr& L, double a, std::vector<std::string>* warnings) {
  const double base = std::max(std::fabs(a), 1.0);
  double shift = 1e-12 * base;
  for (int i = 0; i < 80; ++i) {
    const double probe = (i == 0) ? a : a + shift;
    try {
      (void)evaluate(L, probe);
      if (i > 0 && warnings)
        warnings->push_back("anchor shifted from " + format_double(a) + " to " +
                            format_double(probe) + " (weight not evaluable at anchor)");
      return probe;
    } catch (const DomainError&) {
      shift *= 2.0;
    }
  }
  throw DomainError("weight expression not evaluable near the anchor");
}

}  // namespace detail

struct NormalizerTable {
  std::vector<double> x;
  std::vector<double> h;
  std::vector<std::string> warnings;
};

/// H(x_k) for each normalizer family: log x, the running integral of L(t)/t,
/// the tail integral of L(t)/t, or the ratio x/b(x).
inline NormalizerTable tabulate_normalizer(const NormalizerSpec& norm, const Grid& grid,
                                           const QuadConfig& cfg = {}) {
  NormalizerTable out;
  out.x = grid.points();
  out.h.reserve(out.x.size());
  switch (norm.kind) {
    case NormKind::Log: {
      for (double x : out.x) out.h.push_back(std::log(x));
      return out;
    }
    case NormKind::WeightedL: {
      const Expr& L = *norm.expr;
      for (double x : out.x)
        if (eval_signed_log(L, x).sign <= 0)
          throw NonPositiveError("weight L not positive on the grid");
      const double a = detail::effective_anchor(L, norm.anchor, &out.warnings);
      if (!(grid.x0 >= a))
        throw std::invalid_argument("normalizer anchor must not exceed the first grid point");
      auto f = [&L](double t) { return evaluate(L, t) / t; };
      std::vector<std::pair<double, double>> table;
      try {
        table = cumulative_integral(f, a, grid, cfg);
      } catch (const DepthExceeded&) {
        // integrable anchor singularities (weights like t^-1/2) cannot be
        // certified at the default tolerance; retry with a relaxed floor
        QuadConfig relaxed = cfg;
        relaxed.abs_tol = std::max(cfg.abs_tol, 1e-7);
        relaxed.rel_tol = std::max(cfg.rel_tol, 1e-8);
        table = cumulative_integral(f, a, grid, relaxed);
        out.warnings.push_back("anchor panel integrated at reduced tolerance");
      }
      for (auto& [x, h] : table) out.h.push_back(h);
      return out;
    }
    case NormKind::TailL: {
      const Expr& L = *norm.expr;
      for (double x : out.x)
        if (eval_signed_log(L, x).sign <= 0)
          throw NonPositiveError("weight L not positive on the grid");
      auto f = [&L](double t) { return evaluate(L, t) / t; };
      // pure relative tolerances: the tail values themselves can be tiny
      QuadConfig rel_cfg = cfg;
      rel_cfg.abs_tol = 1e-280;
      auto far = integrate_to_infinity(f, out.x.back(), rel_cfg);
      if (!far)
        throw DomainError("tail integral of L(t)/t divergent; tail normalizer undefined");
      std::vector<double> tail(out.x.size());
      tail.back() = *far;
      for (std::size_t k = out.x.size() - 1; k-- > 0;)
        tail[k] = tail[k + 1] + integrate_finite(f, out.x[k], out.x[k + 1], rel_cfg);
      for (double t : tail)
        if (!(t > 0)) throw TailVanished("tail integral underflows on the grid");
      out.h = std::move(tail);
      return out;
    }
    case NormKind::SelfNeglectingB: {
      const Expr& b = *norm.expr;
      for (double x : out.x) {
        SignedLog sb = eval_signed_log(b, x);
        if (sb.sign <= 0) throw NonPositiveError("auxiliary b not positive on the grid");
        out.h.push_back(std::exp(std::log(x) - sb.log_abs));
      }
      return out;
    }
  }
  throw std::logic_error("unreachable normalizer kind");
}

// ---------------------------------------------------------------------------
// Order estimates
// ---------------------------------------------------------------------------

/// rho with O-type bounds and the diagnostics table behind them. rho_lower
/// and rho_upper extrapolate the running min/max envelopes of the ratio over
/// the grid tail.
struct OrderEstimate {
  double rho = 0.0;
  double rho_lower = 0.0;
  double rho_upper = 0.0;
  LimitEstimate limit;
  ClassId class_id = ClassId::M;
  NormalizerSpec normalizer;
  std::vector<double> x, log_u, h, ratio;
  std::vector<std::string> warnings;
};

namespace detail {

inline double log_f(const Expr& f, double x) {
  SignedLog s = eval_signed_log(f, x);
  if (s.sign <= 0) throw NonPositiveError("function not positive at x=" + format_double(x));
  return s.log_abs;
}

inline std::vector<double> log_u_values(const Expr& U, const std::vector<double>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    SignedLog s = eval_signed_log(U, x);
    if (s.sign <= 0)
      throw NonPositiveError("function not positive at x=" + format_double(x));
    out.push_back(s.log_abs);
  }
  return out;
}

inline std::pair<double, double> envelope_bounds(const std::vector<double>& ratio) {
  const std::size_t n = ratio.size();
  const std::size_t q = std::max<std::size_t>(3, n / 4);
  std::vector<double> env_min, env_max;
  double mn = ratio[n - q], mx = ratio[n - q];
  for (std::size_t i = n - q; i < n; ++i) {
    mn = std::min(mn, ratio[i]);
    mx = std::max(mx, ratio[i]);
    env_min.push_back(mn);
    env_max.push_back(mx);
  }
  const double lo = iterated_aitken(env_min).value;
  const double hi = iterated_aitken(env_max).value;
  return {lo, hi};
}

/// Shared assembly: ratio = logU / H, extrapolated with the normalizer basis.
inline OrderEstimate estimate_from_tables(std::vector<double> xs, std::vector<double> logu,
                                          std::vector<double> h, ClassId cls,
                                          NormalizerSpec norm, std::vector<std::string> warnings) {
  OrderEstimate est;
  est.class_id = cls;
  est.normalizer = std::move(norm);
  est.warnings = std::move(warnings);
  // drop points where the denominator has not grown past quadrature noise
  double hmax = 0;
  for (double v : h) hmax = std::max(hmax, std::fabs(v));
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (std::fabs(h[k]) <= 1e-12 * hmax) continue;
    est.x.push_back(xs[k]);
    est.log_u.push_back(logu[k]);
    est.h.push_back(h[k]);
    est.ratio.push_back(logu[k] / h[k]);
  }
  if (est.ratio.size() < 8) throw TooFewPoints("order estimate: fewer than 8 usable grid points");
  est.limit = extrapolate_with_normalizer(est.ratio, est.h);
  est.rho = est.limit.value;
  if (std::isfinite(est.rho)) {
    auto [lo, hi] = envelope_bounds(est.ratio);
    est.rho_lower = std::min(lo, est.rho);
    est.rho_upper = std::max(hi, est.rho);
  } else {
    est.rho_lower = est.limit.tail_min;
    est.rho_upper = est.limit.tail_max;
    if (est.rho < 0) est.rho_lower = -std::numeric_limits<double>::infinity();
    else est.rho_upper = std::numeric_limits<double>::infinity();
  }
  return est;
}

}  // namespace detail

/// Order in the plain sense: limit of log U(x) / log x.
inline OrderEstimate estimate_order_m(const Expr& U, const Grid& grid = {},
                                      const QuadConfig& cfg = {}) {
  (void)cfg;
  NormalizerSpec norm = NormalizerSpec::log_x();
  NormalizerTable nt = tabulate_normalizer(norm, grid);
  auto logu = detail::log_u_values(U, nt.x);
  return detail::estimate_from_tables(nt.x, logu, nt.h, ClassId::M, norm, nt.warnings);
}

/// Order against H(x) = int_a^x L(t)/t dt. The caller supplies the assumption
/// label: 'A' classifies into M0, 'B' into M0plus.
inline OrderEstimate estimate_order_weighted(const Expr& U, const Expr& L, double a,
                                             char assumption_label, const Grid& grid = {},
                                             const QuadConfig& cfg = {}) {
  if (assumption_label != 'A' && assumption_label != 'B')
    throw std::invalid_argument("estimate_order_weighted: assumption label must be 'A' or 'B'");
  NormalizerSpec norm = NormalizerSpec::weighted(L, a);
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  if (nt.h.back() < 1e3 * cfg.abs_tol)
    throw NormalizerDegenerate("normalizer integral is at quadrature noise level");
  auto logu = detail::log_u_values(U, nt.x);
  const ClassId cls = assumption_label == 'A' ? ClassId::M0 : ClassId::M0Plus;
  return detail::estimate_from_tables(nt.x, logu, nt.h, cls, norm, nt.warnings);
}

/// Order against the tail integral int_x^inf L(t)/t dt (the convergent case).
inline OrderEstimate estimate_order_tail(const Expr& U, const Expr& L, double a,
                                         const Grid& grid = {}, const QuadConfig& cfg = {}) {
  NormalizerSpec norm = NormalizerSpec::tail(L, a);
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  auto logu = detail::log_u_values(U, nt.x);
  return detail::estimate_from_tables(nt.x, logu, nt.h, ClassId::M0Minus, norm, nt.warnings);
}

/// Order against the rapidly growing scale x/b(x) of a self-neglecting
/// auxiliary function. Requires b(x)/x -> 0.
inline OrderEstimate estimate_order_sn(const Expr& U, const Expr& b, const Grid& grid = {},
                                       const QuadConfig& cfg = {}) {
  NormalizerSpec norm = NormalizerSpec::self_neglecting(b);
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  std::vector<double> b_over_x;
  b_over_x.reserve(nt.x.size());
  for (double h : nt.h) b_over_x.push_back(1.0 / h);
  LimitEstimate bx = extrapolate_limit(b_over_x);
  if (!(tends_to_zero(b_over_x) || std::fabs(bx.value) <= 0.02))
    throw BNotSuitable("b(x)/x does not tend to 0");
  auto logu = detail::log_u_values(U, nt.x);
  return detail::estimate_from_tables(nt.x, logu, nt.h, ClassId::M1, norm, nt.warnings);
}

// ---------------------------------------------------------------------------
// Assumption checking
// ---------------------------------------------------------------------------

/// Which growth regime the weight L falls in: 'A' (L -> 0 with divergent
/// integral), 'B' (L -> infinity), 'C' (convergent tail integral), or 'N'.
struct AssumptionVerdict {
  char label = 'N';
  LimitEstimate L_limit;
  bool integral_diverges = false;
  std::vector<std::pair<double, double>> evidence;
  std::vector<std::string> warnings;
};

inline AssumptionVerdict check_assumption(const Expr& L, double a, const Grid& grid = {},
                                          const QuadConfig& cfg = {}) {
  AssumptionVerdict v;
  const std::vector<double> xs = grid.points();
  std::vector<double> lvals;
  lvals.reserve(xs.size());
  for (double x : xs) {
    SignedLog s = eval_signed_log(L, x);
    if (s.sign <= 0) throw NonPositiveError("L not positive at x=" + detail::format_double(x));
    lvals.push_back(s.to_value());
    v.evidence.emplace_back(x, lvals.back());
  }
  const double a_eff = detail::effective_anchor(L, a, &v.warnings);
  // convergence of the tail integral does not depend on its lower limit
  const double probe_from = std::max(a_eff, 1.0);
  std::optional<double> tail;
  try {
    tail = integrate_to_infinity([&L](double t) { return evaluate(L, t) / t; }, probe_from, cfg);
  } catch (const DepthExceeded&) {
    throw Inconclusive("integral of L(t)/t neither converged nor was judged divergent");
  }
  v.L_limit = extrapolate_limit(lvals);
  v.integral_diverges = !tail.has_value();
  if (!v.integral_diverges) {
    v.label = 'C';
    return v;
  }
  if (std::fabs(v.L_limit.value) <= 0.02) {
    v.label = 'A';
    return v;
  }
  std::vector<double> recip;
  recip.reserve(lvals.size());
  for (double lv : lvals) recip.push_back(1.0 / lv);
  const bool grows = tends_to_infinity(lvals) ||
                     (std::fabs(extrapolate_limit(recip).value) <= 0.02 &&
                      detail::quartile_increasing(lvals));
  if (grows) {
    v.label = 'B';
    return v;
  }
  v.label = 'N';
  return v;
}

// ---------------------------------------------------------------------------
// Characterization (sandwich) verification
// ---------------------------------------------------------------------------

/// Membership verdict with the evidence that produced it.
struct ClassVerdict {
  enum class Membership { Member, NonMember, Inconclusive };
  Membership member = Membership::Inconclusive;
  OrderEstimate order;
  bool characterization_passed = false;
  std::optional<double> x_epsilon;
  std::string notes;
};

namespace detail {

// Trend of D_k = logU - (rho +- eps) H toward -inf (dir < 0) or +inf
// (dir > 0). Tier one is the raw threshold test; when the scale grows too
// slowly to cross the threshold inside the grid, the sign of the extrapolated
// D/H limit decides (H diverges under the standing assumptions).
// Returns +1 established, -1 refuted, 0 undecided.
inline int trend_established(const std::vector<double>& d, double ratio_limit_minus_bound,
                             double ratio_uncertainty, int dir) {
  const double kLogDelta = std::log(1e-3);
  const std::size_t n = d.size();
  const std::size_t q = std::max<std::size_t>(2, n / 4);
  bool monotone = true;
  for (std::size_t i = n - q; i + 1 < n; ++i)
    if (dir < 0 ? !(d[i + 1] < d[i]) : !(d[i + 1] > d[i])) monotone = false;
  if (monotone && (dir < 0 ? d.back() < kLogDelta : d.back() > -kLogDelta)) return 1;
  const double margin = std::max(3.0 * ratio_uncertainty, 1e-4);
  if (dir < 0) {
    if (ratio_limit_minus_bound < -margin) return 1;
    if (ratio_limit_minus_bound > margin) return -1;
  } else {
    if (ratio_limit_minus_bound > margin) return 1;
    if (ratio_limit_minus_bound < -margin) return -1;
  }
  return 0;
}

inline std::optional<std::size_t> sandwich_start_index(const std::vector<double>& logu,
                                                       const std::vector<double>& h, double rho,
                                                       double eps) {
  const std::size_t n = logu.size();
  std::ptrdiff_t first_ok = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(n) - 1; k >= 0; --k) {
    const std::size_t i = static_cast<std::size_t>(k);
    const bool ok = (rho - eps) * h[i] <= logu[i] && logu[i] <= (rho + eps) * h[i];
    if (!ok) break;
    first_ok = k;
  }
  const std::size_t q = std::max<std::size_t>(2, n / 4);
  if (first_ok >= static_cast<std::ptrdiff_t>(n - q + 1)) return std::nullopt;
  return static_cast<std::size_t>(first_ok);
}

inline ClassId class_for_kind(NormKind k) {
  switch (k) {
    case NormKind::Log: return ClassId::M;
    case NormKind::WeightedL: return ClassId::M0;
    case NormKind::TailL: return ClassId::M0Minus;
    case NormKind::SelfNeglectingB: return ClassId::M1;
  }
  return ClassId::M;
}

}  // namespace detail

/// Checks U(x)/V^{rho+eps}(x) -> 0 and U(x)/V^{rho-eps}(x) -> infinity, where
/// V = exp H. Both limits are examined in log space.
inline ClassVerdict characterize(const Expr& U, const NormalizerSpec& norm, double rho, double eps,
                                 const Grid& grid = {}, const QuadConfig& cfg = {}) {
  if (!(eps > 0)) throw std::invalid_argument("characterize: eps must be positive");
  if (norm.kind == NormKind::TailL)
    throw std::invalid_argument("characterize: requires a divergent normalizer scale");
  ClassVerdict verdict;
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  auto logu = detail::log_u_values(U, nt.x);
  verdict.order = detail::estimate_from_tables(nt.x, logu, nt.h, detail::class_for_kind(norm.kind),
                                               norm, nt.warnings);
  const std::vector<double>& h = verdict.order.h;
  const std::vector<double>& lu = verdict.order.log_u;
  std::vector<double> d_up(h.size()), d_down(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    d_up[k] = lu[k] - (rho + eps) * h[k];
    d_down[k] = lu[k] - (rho - eps) * h[k];
  }
  const double rl = verdict.order.limit.value;
  const double ru = verdict.order.limit.uncertainty;
  const double up_gap = std::isfinite(rl) ? rl - (rho + eps)
                                          : (rl > 0 ? 1.0 : -1.0) * std::numeric_limits<double>::infinity();
  const double down_gap = std::isfinite(rl) ? rl - (rho - eps)
                                            : (rl > 0 ? 1.0 : -1.0) * std::numeric_limits<double>::infinity();
  const int up = detail::trend_established(d_up, up_gap, ru, -1);
  const int down = detail::trend_established(d_down, down_gap, ru, +1);
  verdict.characterization_passed = up == 1 && down == 1;
  if (up == 0 || down == 0) {
    verdict.member = ClassVerdict::Membership::Inconclusive;
    verdict.notes = "trend not established within the grid";
  } else if (!verdict.characterization_passed) {
    verdict.member = ClassVerdict::Membership::NonMember;
    verdict.notes = up == -1 ? "U grows at least like V^(rho+eps)" : "U falls below V^(rho-eps)";
  } else {
    verdict.member = verdict.order.limit.converged ? ClassVerdict::Membership::Member
                                                   : ClassVerdict::Membership::Inconclusive;
    if (!verdict.order.limit.converged) verdict.notes = "sandwich holds but the ratio has not settled";
  }
  auto idx = detail::sandwich_start_index(lu, h, rho, eps);
  if (idx) verdict.x_epsilon = verdict.order.x[*idx];
  return verdict;
}

/// Smallest grid point from which the sandwich V^{rho-eps} <= U <= V^{rho+eps}
/// holds through the end of the grid. Throws SandwichNotFound when the final
/// quartile still violates it.
inline double locate_sandwich(const Expr& U, const NormalizerSpec& norm, double rho, double eps,
                              const Grid& grid = {}, const QuadConfig& cfg = {}) {
  if (!(eps > 0)) throw std::invalid_argument("locate_sandwich: eps must be positive");
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  auto logu = detail::log_u_values(U, nt.x);
  auto idx = detail::sandwich_start_index(logu, nt.h, rho, eps);
  if (!idx) throw SandwichNotFound("sandwich still violated in the final quartile");
  return nt.x[*idx];
}

// ---------------------------------------------------------------------------
// Representation decompositions
// ---------------------------------------------------------------------------

/// Tabulated alpha/beta/epsilon of log U(x) = alpha(x) + int beta(t) L(t)/t dt
/// with beta = rho + eps. alpha_ratio_limit extrapolates alpha(x)/H(x), which
/// vanishes exactly when the membership holds.
struct RepresentationDecomposition {
  double rho = 0.0;
  struct Row {
    double x, h, eps, beta, alpha;
  };
  std::vector<Row> table;
  LimitEstimate alpha_ratio_limit;
};

namespace detail {

// eps(t) between grid points, using a one-panel rule for the local H offset.
template <class LogU>
double eps_between(const LogU& logu_at, const Expr& L, double t, double xk, double hk,
                   double rho) {
  const double h_off = gk15([&L](double s) { return evaluate(L, s) / s; }, xk, t).value;
  const double h = hk + h_off;
  return logu_at(t) / h - rho;
}

}  // namespace detail

inline RepresentationDecomposition decompose_representation(const Expr& U, const Expr& L, double a,
                                                            double rho, const Grid& grid = {},
                                                            const QuadConfig& cfg = {}) {
  RepresentationDecomposition rep;
  rep.rho = rho;
  NormalizerSpec norm = NormalizerSpec::weighted(L, a);
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  auto logu = detail::log_u_values(U, nt.x);
  auto logu_at = [&U](double t) {
    SignedLog s = eval_signed_log(U, t);
    if (s.sign <= 0) throw NonPositiveError("function not positive");
    return s.log_abs;
  };

  // start past any zero-H points (anchor may coincide with the first abscissa)
  std::size_t k0 = 0;
  double hmax = 0;
  for (double v : nt.h) hmax = std::max(hmax, std::fabs(v));
  while (k0 < nt.h.size() && std::fabs(nt.h[k0]) <= 1e-12 * hmax) ++k0;
  if (nt.h.size() - k0 < 8) throw TooFewPoints("representation: fewer than 8 usable grid points");

  QuadConfig inner = cfg;
  inner.abs_tol = std::max(cfg.abs_tol, 1e-9);
  inner.rel_tol = std::max(cfg.rel_tol, 1e-8);
  std::vector<double> alpha_ratio;
  double inner_integral = 0.0;
  for (std::size_t k = k0; k < nt.x.size(); ++k) {
    const double eps_k = logu[k] / nt.h[k] - rho;
    if (k > k0) {
      const std::size_t p = k - 1;
      inner_integral += integrate_finite(
          [&](double t) {
            return detail::eps_between(logu_at, L, t, nt.x[p], nt.h[p], rho) * evaluate(L, t) / t;
          },
          nt.x[p], nt.x[k], inner);
    }
    const double alpha_k = eps_k * nt.h[k] - inner_integral;
    rep.table.push_back({nt.x[k], nt.h[k], eps_k, rho + eps_k, alpha_k});
    alpha_ratio.push_back(alpha_k / nt.h[k]);
  }
  rep.alpha_ratio_limit = extrapolate_limit(alpha_ratio);
  return rep;
}

/// Mirror of decompose_representation for the convergent-tail class:
/// log U(x) = alpha(x) + int_x^inf beta(t) L(t)/t dt.
inline RepresentationDecomposition decompose_representation_tail(const Expr& U, const Expr& L,
                                                                 double a, double rho,
                                                                 const Grid& grid = {},
                                                                 const QuadConfig& cfg = {}) {
  RepresentationDecomposition rep;
  rep.rho = rho;
  NormalizerSpec norm = NormalizerSpec::tail(L, a);
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  auto logu = detail::log_u_values(U, nt.x);
  const std::size_t n = nt.x.size();

  std::vector<double> eps(n);
  for (std::size_t k = 0; k < n; ++k) eps[k] = logu[k] / nt.h[k] - rho;

  auto logu_at = [&U](double t) {
    SignedLog s = eval_signed_log(U, t);
    if (s.sign <= 0) throw NonPositiveError("function not positive");
    return s.log_abs;
  };
  QuadConfig inner = cfg;
  inner.abs_tol = std::max(cfg.abs_tol, 1e-12);
  // int_x^inf eps L / t, truncated at the last abscissa; the remainder is
  // approximated by the final eps times the remaining tail mass.
  std::vector<double> J(n, eps.back() * nt.h.back());
  for (std::size_t k = n - 1; k-- > 0;) {
    J[k] = J[k + 1] + integrate_finite(
                          [&](double t) {
                            const double h_off =
                                detail::gk15([&L](double s) { return evaluate(L, s) / s; },
                                             nt.x[k], t)
                                    .value;
                            const double h = nt.h[k] - h_off;
                            return (logu_at(t) / h - rho) * evaluate(L, t) / t;
                          },
                          nt.x[k], nt.x[k + 1], inner);
  }
  std::vector<double> alpha_ratio;
  for (std::size_t k = 0; k < n; ++k) {
    const double alpha_k = eps[k] * nt.h[k] - J[k];
    rep.table.push_back({nt.x[k], nt.h[k], eps[k], rho + eps[k], alpha_k});
    alpha_ratio.push_back(alpha_k / nt.h[k]);
  }
  rep.alpha_ratio_limit = extrapolate_limit(alpha_ratio);
  return rep;
}

// ---------------------------------------------------------------------------
// Further criteria
// ---------------------------------------------------------------------------

/// Limit of (U(x) - 1) / int_x^inf L(t)/t dt, which must agree with the
/// tail-normalized order when the tail integral converges.
inline LimitEstimate check_m0minus_ratio(const Expr& U, const Expr& L, double a,
                                         const Grid& grid = {}, const QuadConfig& cfg = {}) {
  NormalizerSpec norm = NormalizerSpec::tail(L, a);
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  Expr u_minus_1 = Expr::binary(NodeKind::Sub, U, Expr::constant(1));
  std::vector<double> y;
  y.reserve(nt.x.size());
  for (std::size_t k = 0; k < nt.x.size(); ++k) {
    SignedLog s = eval_signed_log(u_minus_1, nt.x[k]);
    const double v = s.sign * std::exp(s.log_abs - std::log(nt.h[k]));
    y.push_back(v);
  }
  return extrapolate_limit(y);
}

/// O-type order bounds: extrapolated running min/max envelopes of the ratio.
inline std::pair<double, double> estimate_order_bounds(const Expr& U, const NormalizerSpec& norm,
                                                       const Grid& grid = {},
                                                       const QuadConfig& cfg = {}) {
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  auto logu = detail::log_u_values(U, nt.x);
  OrderEstimate est = detail::estimate_from_tables(nt.x, logu, nt.h,
                                                   detail::class_for_kind(norm.kind), norm,
                                                   nt.warnings);
  return {est.rho_lower, est.rho_upper};
}

/// Derivative-based order: x U'/(L U) for weighted normalizers, b U'/U for
/// self-neglecting ones. Agrees with the ratio estimators when it converges.
inline LimitEstimate check_derivative_criterion(const Expr& U, const NormalizerSpec& norm,
                                                const Grid& grid = {}, const QuadConfig& cfg = {}) {
  if (norm.kind == NormKind::TailL)
    throw std::invalid_argument("derivative criterion: weighted or self-neglecting normalizer only");
  NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
  Expr du = differentiate(U);
  std::vector<double> r;
  r.reserve(nt.x.size());
  for (double x : nt.x) {
    SignedLog su = eval_signed_log(U, x);
    if (su.sign <= 0) throw NonPositiveError("function not positive at x=" + detail::format_double(x));
    // U'/U = (log U)'. The structural quotient loses all digits once |log U|
    // dwarfs the quotient itself; switch to central differences of log U then.
    double uprime_over_u;
    if (std::fabs(su.log_abs) < 1e6) {
      SignedLog sd = eval_signed_log(du, x);
      uprime_over_u = sd.sign == 0 ? 0.0 : sd.sign * std::exp(sd.log_abs - su.log_abs);
    } else {
      const double h = x * 1e-6;
      uprime_over_u = (detail::log_f(U, x + h) - detail::log_f(U, x - h)) / (2 * h);
    }
    double scale;
    switch (norm.kind) {
      case NormKind::Log:
        scale = x;
        break;
      case NormKind::WeightedL:
        scale = std::exp(std::log(x) - eval_log(*norm.expr, x));
        break;
      case NormKind::SelfNeglectingB:
        scale = std::exp(eval_log(*norm.expr, x));
        break;
      default:
        scale = 1.0;
        break;
    }
    r.push_back(uprime_over_u * scale);
  }
  return extrapolate_with_normalizer(r, nt.h);
}

/// Sequence analogue: limit of log a_n / sum_{k<=n} b_k / k at geometric
/// checkpoints n = floor(N 2^-j). a is supplied as log a_n to sidestep
/// overflow.
inline LimitEstimate sequence_order(const std::function<double(long long)>& log_a,
                                    const std::function<double(long long)>& b_seq, long long N) {
  if (N < 1024) throw TooFewPoints("sequence_order: N must be at least 1024");
  std::vector<long long> checkpoints;
  for (long long n = N; n >= 8; n /= 2) checkpoints.push_back(n);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  std::vector<double> y, s_at;
  double s = 0.0;
  std::size_t next = 0;
  for (long long n = 1; n <= N && next < checkpoints.size(); ++n) {
    s += b_seq(n) / static_cast<double>(n);
    if (n == checkpoints[next]) {
      const double la = log_a(n);
      if (std::isnan(la)) throw DomainError("sequence_order: log a_n not finite");
      if (std::fabs(s) > 1e-300) {
        y.push_back(la / s);
        s_at.push_back(s);
      }
      ++next;
    }
  }
  if (y.size() < 8) throw TooFewPoints("sequence_order: fewer than 8 usable checkpoints");
  bool h_usable = true;
  for (double v : s_at)
    if (!(v > 0)) h_usable = false;
  return h_usable ? extrapolate_with_normalizer(y, s_at) : extrapolate_limit(y);
}

/// Limit of log U(x) / log |U'(x)|.
inline LimitEstimate log_derivative_order(const Expr& U, const Grid& grid = {},
                                          const QuadConfig& cfg = {}) {
  (void)cfg;
  const std::vector<double> xs = grid.points();
  Expr du = differentiate(U);
  std::vector<double> y, habs;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    SignedLog su = eval_signed_log(U, xs[k]);
    if (su.sign <= 0) throw NonPositiveError("function not positive");
    SignedLog sd = eval_signed_log(du, xs[k]);
    if (sd.sign == 0) {
      if (k >= xs.size() / 2) throw DerivativeVanishes("U' vanishes on the grid tail");
      continue;
    }
    if (std::fabs(sd.log_abs) < 1e-9) continue;  // |U'| crossing 1
    y.push_back(su.log_abs / sd.log_abs);
    habs.push_back(std::fabs(sd.log_abs));
  }
  if (y.size() < 8) throw TooFewPoints("log_derivative_order: fewer than 8 usable points");
  return extrapolate_with_normalizer(y, habs);
}

}  // namespace orderkit
