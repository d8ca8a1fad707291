#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "orderkit/expr.hpp"

namespace orderkit {

/// Geometric abscissa grid x_k = x0 * ratio^k, k = 0 .. steps-1. Every
/// "x to infinity" limit in the toolkit is sampled on such a grid, making the
/// extrapolation index affine in log x.
struct Grid {
  double x0 = 10.0;
  double ratio = 2.0;
  int steps = 40;

  std::vector<double> points() const {
    if (!(x0 > 0)) throw std::invalid_argument("Grid: x0 must be positive");
    if (!(ratio > 1)) throw std::invalid_argument("Grid: ratio must exceed 1");
    if (steps < 8) throw std::invalid_argument("Grid: need at least 8 steps");
    std::vector<double> xs(static_cast<std::size_t>(steps));
    double x = x0;
    for (int k = 0; k < steps; ++k) {
      xs[static_cast<std::size_t>(k)] = x;
      x *= ratio;
    }
    return xs;
  }
};

struct QuadConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  int max_depth = 48;
  double divergence_bound = 1e12;  // running-sum threshold declaring divergence

  void validate() const {
    if (!(abs_tol > 0) || !(rel_tol > 0))
      throw std::invalid_argument("QuadConfig: tolerances must be positive");
    if (max_depth < 10) throw std::invalid_argument("QuadConfig: max_depth must be at least 10");
  }
};

class DepthExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TooFewPoints : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Gauss-Kronrod 7-15 panel rule
// ---------------------------------------------------------------------------

namespace detail {

// Nodes/weights of the 15-point Kronrod extension of 7-point Gauss.
inline constexpr double kGk15Nodes[8] = {
    0.99145537112081263920685469752633,
    0.94910791234275852452618968404785,
    0.86486442335976907278971278864093,
    0.74153118559939443986386477328079,
    0.58608723546769113029414483825873,
    0.40584515137739716690660641207696,
    0.20778495500789846760068940377324,
    0.0,
};

inline constexpr double kGk15KronrodW[8] = {
    0.02293532201052922496373200805897,
    0.06309209262997855329070066318920,
    0.10479001032225018383987632254152,
    0.14065325971552591874518959051021,
    0.16900472663926790282658342659855,
    0.19035057806478540991325640242101,
    0.20443294007529889241416199923466,
    0.20948214108472782801299917489171,
};

inline constexpr double kGk15GaussW[4] = {
    0.12948496616886969327061143267908,
    0.27970539148927666790146777142378,
    0.38183005050511894495036977548898,
    0.41795918367346938775510204081633,
};

struct PanelEstimate {
  double value;
  double error;
};

template <class F>
PanelEstimate gk15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = kGk15KronrodW[7] * fc;
  double resg = kGk15GaussW[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kGk15Nodes[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    resk += kGk15KronrodW[j] * (f1 + f2);
    if (j % 2 == 1) resg += kGk15GaussW[j / 2] * (f1 + f2);
  }
  return {resk * h, std::fabs(resk - resg) * h};
}

struct Panel {
  double a, b, value, error;
  int depth;
  bool operator<(const Panel& o) const { return error < o.error; }
};

}  // namespace detail

/// Adaptive quadrature over [a, b] with an embedded 7/15 rule pair. Panels
/// are split worst-error first until the summed error estimate meets
/// max(abs_tol, rel_tol * |value|).
template <class F>
double integrate_finite(F&& f, double a, double b, const QuadConfig& cfg = {}) {
  cfg.validate();
  if (!(a <= b)) throw std::invalid_argument("integrate_finite: requires a <= b");
  if (a == b) return 0.0;
  std::priority_queue<detail::Panel> panels;
  detail::PanelEstimate first = detail::gk15(f, a, b);
  panels.push({a, b, first.value, first.error, 0});
  double total_value = first.value;
  double total_error = first.error;
  std::size_t count = 1;
  for (;;) {
    const double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::fabs(total_value));
    if (total_error <= tol) return total_value;
    detail::Panel worst = panels.top();
    panels.pop();
    if (worst.depth >= cfg.max_depth)
      throw DepthExceeded("integrate_finite: max_depth reached before tolerance");
    if (count > 40000)
      throw DepthExceeded("integrate_finite: panel budget exhausted");
    const double mid = 0.5 * (worst.a + worst.b);
    detail::PanelEstimate left = detail::gk15(f, worst.a, mid);
    detail::PanelEstimate right = detail::gk15(f, mid, worst.b);
    total_value += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    if (total_error < 0) total_error = 0;
    panels.push({worst.a, mid, left.value, left.error, worst.depth + 1});
    panels.push({mid, worst.b, right.value, right.error, worst.depth + 1});
    ++count;
  }
}

// ---------------------------------------------------------------------------
// Sequence extrapolation
// ---------------------------------------------------------------------------

/// Numerical stand-in for a limit at infinity. tail_min/tail_max are the raw
/// bounds over the last quartile of the input sequence; uncertainty is the
/// self-consistency residual of the chosen extrapolant.
struct LimitEstimate {
  double value = 0.0;
  double uncertainty = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool oscillatory = false;
  double tail_min = 0.0;
  double tail_max = 0.0;
};

namespace detail {

struct Extrapolant {
  double value = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  bool ok = false;
};

inline double window_spread(const std::vector<double>& s, std::size_t w) {
  if (s.empty()) return std::numeric_limits<double>::infinity();
  w = std::min(w, s.size());
  auto [lo, hi] = std::minmax_element(s.end() - static_cast<std::ptrdiff_t>(w), s.end());
  return *hi - *lo;
}

// Single run of iterated Aitken delta-squared with a noise guard. Exact on
// geometric convergence; gains a constant factor per pass on algebraic
// tails. The residual combines the within-pass spread with the change across
// passes, since the spread alone understates the error on slowly decaying
// input.
inline Extrapolant iterated_aitken_once(std::vector<double> s) {
  if (s.size() < 3) return {};
  Extrapolant best{s.back(), window_spread(s, 3), true};
  for (int pass = 0; pass < 64 && s.size() >= 3; ++pass) {
    std::vector<double> t;
    t.reserve(s.size() - 2);
    bool bail = false;
    for (std::size_t k = 0; k + 2 < s.size(); ++k) {
      const double d1 = s[k + 1] - s[k];
      const double d2 = s[k + 2] - 2 * s[k + 1] + s[k];
      const double scale = std::fabs(s[k]) + std::fabs(s[k + 1]) + std::fabs(s[k + 2]);
      if (std::fabs(d2) <= 1e-13 * scale + 1e-300) {
        bail = true;
        break;
      }
      const double v = s[k] - d1 * d1 / d2;
      if (!std::isfinite(v)) {
        bail = true;
        break;
      }
      t.push_back(v);
    }
    if (bail || t.empty()) {
      // the pass hit the noise floor: the sequence is constant to machine
      // precision and its spread is the honest residual
      const double res = window_spread(s, 4);
      if (res < best.residual) best = {s.back(), res, true};
      break;
    }
    const double res = std::max(window_spread(t, 4), 0.3 * std::fabs(t.back() - s.back()));
    if (res < best.residual) best = {t.back(), res, true};
    s = std::move(t);
  }
  return best;
}

// Aitken with self-consistency checks. Slowly decaying inputs can stall the
// iteration on a false plateau whose internal spread looks tiny; rerunning on
// a truncated prefix exposes some of that, and an upward drift of the
// increment-decay ratio exposes the rest (a drifting ratio breaks the
// geometric model Aitken extrapolates, by the sensitivity of its limit).
inline Extrapolant iterated_aitken(const std::vector<double>& s) {
  Extrapolant full = iterated_aitken_once(s);
  if (!full.ok || s.size() < 10) return full;
  const std::size_t n = s.size();
  const std::size_t cut = std::max<std::size_t>(4, n / 8);
  std::vector<double> prefix(s.begin(), s.end() - static_cast<std::ptrdiff_t>(cut));
  Extrapolant part = iterated_aitken_once(prefix);
  if (part.ok) full.residual = std::max(full.residual, std::fabs(full.value - part.value));

  bool same_sign = true;
  int sign0 = 0;
  for (std::size_t i = n / 2; i + 1 < n && same_sign; ++i) {
    const double d = s[i + 1] - s[i];
    if (d == 0) same_sign = false;
    else {
      const int sg = d > 0 ? 1 : -1;
      if (sign0 == 0) sign0 = sg;
      else if (sg != sign0) same_sign = false;
    }
  }
  if (same_sign && n >= 14) {
    auto ratio_ending = [&](std::size_t end) {
      double num = 0, den = 0;
      for (std::size_t i = end - 2; i <= end; ++i) {
        num += s[i] - s[i - 1];
        den += s[i - 1] - s[i - 2];
      }
      return den != 0 ? num / den : std::numeric_limits<double>::quiet_NaN();
    };
    const double r2 = ratio_ending(n - 1);
    const double r1 = ratio_ending(n - 1 - std::max<std::size_t>(3, n / 6));
    if (std::isfinite(r1) && std::isfinite(r2) && r2 > 0 && r2 < 0.999 && r2 > r1) {
      const double delta = std::fabs(s[n - 1] - s[n - 2]);
      const double penalty = delta * (r2 - r1) / ((1 - r2) * (1 - r2));
      full.residual = std::max(full.residual, penalty);
    }
  }
  return full;
}

// Least squares y ~ rho + c * (k + d)^(-p) over the last half of the
// sequence, scanning the decay exponent p and index offset d. The residual
// reported is the standard error of the intercept, which is what the
// extrapolated value actually inherits.
inline Extrapolant fit_algebraic_decay(const std::vector<double>& y) {
  const std::size_t n = y.size();
  if (n < 8) return {};
  const std::size_t start = n / 2;
  const std::size_t m = n - start;
  const double mn = static_cast<double>(m);

  auto eval_pd = [&](double p, double d, double* rho_out, double* res_out) {
    double su = 0, suu = 0, sy = 0, suy = 0;
    for (std::size_t i = start; i < n; ++i) {
      const double u = std::pow(static_cast<double>(i + 1) + d, -p);
      su += u;
      suu += u * u;
      sy += y[i];
      suy += u * y[i];
    }
    const double varu = suu / mn - (su / mn) * (su / mn);
    if (!(varu > 1e-18)) return false;
    const double c = (suy / mn - su / mn * sy / mn) / varu;
    const double rho = sy / mn - c * su / mn;
    double sse = 0;
    for (std::size_t i = start; i < n; ++i) {
      const double u = std::pow(static_cast<double>(i + 1) + d, -p);
      const double r = y[i] - rho - c * u;
      sse += r * r;
    }
    const double sigma2 = sse / std::max(1.0, mn - 2.0);
    const double ubar = su / mn;
    const double se_rho = std::sqrt(sigma2 * (1.0 / mn + ubar * ubar / (mn * varu)));
    *rho_out = rho;
    *res_out = se_rho;
    return true;
  };

  struct Cell {
    double p, d, rho, res;
  };
  std::vector<Cell> cells;
  const double plo = std::log(0.05), phi = std::log(5.0);
  static constexpr double kOffsets[] = {0, 0.5, 1, 2, 3, 4, 6, 8, 12, 20};
  for (int i = 0; i <= 40; ++i) {
    const double p = std::exp(plo + (phi - plo) * i / 40.0);
    for (double d : kOffsets) {
      double rho, res;
      if (eval_pd(p, d, &rho, &res)) cells.push_back({p, d, rho, res});
    }
  }
  if (cells.empty()) return {};
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.res < b.res; });
  cells.resize(std::min<std::size_t>(cells.size(), 8));

  // local grid refinement from each of the leading coarse cells; the
  // intercept error surface is multimodal in (p, d)
  Extrapolant best{};
  for (Cell c : cells) {
    double hp = 0.6 * c.p, hd = std::max(0.75, 0.6 * c.d);
    for (int round = 0; round < 14; ++round) {
      Cell local = c;
      for (int ip = -2; ip <= 2; ++ip) {
        for (int id = -2; id <= 2; ++id) {
          const double p = c.p + hp * ip / 2.0;
          const double d = c.d + hd * id / 2.0;
          if (!(p > 0.01) || d < 0) continue;
          double rho, res;
          if (eval_pd(p, d, &rho, &res) && res < local.res) local = {p, d, rho, res};
        }
      }
      c = local;
      hp *= 0.55;
      hd *= 0.55;
    }
    if (c.res < best.residual) best = {c.rho, c.res, true};
  }
  return best;
}

// Least squares y ~ rho + c H^-q over a scan of decay exponents q; the
// corrections of normalized ratios live on powers of the normalizer itself.
inline Extrapolant fit_normalizer_power(const std::vector<double>& y,
                                        const std::vector<double>& H) {
  const std::size_t n = y.size();
  if (n < 8 || H.size() != n) return {};
  const std::size_t start = n / 2;
  const std::size_t m = n - start;
  const double mn = static_cast<double>(m);
  for (std::size_t i = start; i < n; ++i)
    if (!(H[i] > 0) || !std::isfinite(H[i])) return {};
  Extrapolant best{};
  for (int iq = 0; iq <= 24; ++iq) {
    const double q = 0.25 + iq * (3.0 - 0.25) / 24.0;
    double su = 0, suu = 0, sy = 0, suy = 0;
    for (std::size_t i = start; i < n; ++i) {
      const double u = std::pow(H[i], -q);
      su += u;
      suu += u * u;
      sy += y[i];
      suy += u * y[i];
    }
    const double varu = suu / mn - (su / mn) * (su / mn);
    if (!(varu > 1e-18)) continue;
    const double c = (suy / mn - su / mn * sy / mn) / varu;
    const double rho = sy / mn - c * su / mn;
    double sse = 0;
    for (std::size_t i = start; i < n; ++i) {
      const double u = std::pow(H[i], -q);
      const double r = y[i] - rho - c * u;
      sse += r * r;
    }
    const double sigma2 = sse / std::max(1.0, mn - 2.0);
    const double ubar = su / mn;
    const double se = std::sqrt(sigma2 * (1.0 / mn + ubar * ubar / (mn * varu)));
    if (se < best.residual) best = {rho, se, true};
  }
  return best;
}

// Least squares against an explicit normalizer basis: y ~ rho + c / H
// (+ d / (H e^H) when e^H stays in range). Captures the generic correction
// structure of ratios whose numerator is rho * H + O(1) + o(1).
inline Extrapolant fit_against_normalizer(const std::vector<double>& y,
                                          const std::vector<double>& H) {
  const std::size_t n = y.size();
  if (n < 8 || H.size() != n) return {};
  const std::size_t start = n / 2;
  const std::size_t m = n - start;
  for (std::size_t i = start; i < n; ++i)
    if (!(H[i] > 0) || !std::isfinite(H[i])) return {};

  bool third = true;
  for (std::size_t i = start; i < n; ++i)
    if (H[i] > 13.0) third = false;  // e^H beyond useful contrast

  const std::size_t nb = third ? 3 : 2;
  double ata[3][3] = {};
  double atb[3] = {};
  for (std::size_t i = start; i < n; ++i) {
    double phi[3] = {1.0, 1.0 / H[i], third ? 1.0 / (H[i] * std::exp(H[i])) : 0.0};
    for (std::size_t r = 0; r < nb; ++r) {
      for (std::size_t c = 0; c < nb; ++c) ata[r][c] += phi[r] * phi[c];
      atb[r] += phi[r] * y[i];
    }
  }
  // Gaussian elimination on the tiny normal system.
  double aug[3][4];
  for (std::size_t r = 0; r < nb; ++r) {
    for (std::size_t c = 0; c < nb; ++c) aug[r][c] = ata[r][c];
    aug[r][nb] = atb[r];
  }
  for (std::size_t col = 0; col < nb; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < nb; ++r)
      if (std::fabs(aug[r][col]) > std::fabs(aug[piv][col])) piv = r;
    if (std::fabs(aug[piv][col]) < 1e-13) return {};
    std::swap(aug[piv], aug[col]);
    for (std::size_t r = 0; r < nb; ++r) {
      if (r == col) continue;
      const double fct = aug[r][col] / aug[col][col];
      for (std::size_t c = col; c <= nb; ++c) aug[r][c] -= fct * aug[col][c];
    }
  }
  double coef[3] = {};
  for (std::size_t r = 0; r < nb; ++r) coef[r] = aug[r][nb] / aug[r][r];

  double sse = 0;
  for (std::size_t i = start; i < n; ++i) {
    double fit = coef[0] + coef[1] / H[i];
    if (third) fit += coef[2] / (H[i] * std::exp(H[i]));
    const double r = y[i] - fit;
    sse += r * r;
  }
  const double mn = static_cast<double>(m);
  const double dof = std::max(1.0, mn - static_cast<double>(nb));
  const double sigma2 = sse / dof;
  // Spread of the 1/H regressor controls how well the intercept separates.
  double s1 = 0, s2 = 0;
  for (std::size_t i = start; i < n; ++i) {
    s1 += 1.0 / H[i];
    s2 += 1.0 / (H[i] * H[i]);
  }
  const double var_u = s2 / mn - (s1 / mn) * (s1 / mn);
  if (var_u <= 0) return {};
  const double ubar = s1 / mn;
  const double se = std::sqrt(sigma2 * (1.0 / mn + ubar * ubar / (mn * var_u)));
  return {coef[0], se, true};
}

// Closed-form fit of s_j = S - A/(j + d) from equally spaced triples, the
// exact shape of partial sums whose increments decay like (j + d)^-2.
// Cross-checked across three spacings and validated by the model residual.
inline Extrapolant fit_inverse_offset(const std::vector<double>& s) {
  const std::size_t n = s.size();
  if (n < 12) return {};
  struct Candidate {
    double S, A, d, rms;
  };
  std::vector<Candidate> cands;
  for (std::size_t w : {n / 3, n / 4, n / 6}) {
    if (w < 3 || 2 * w >= n) continue;
    const std::size_t i3 = n - 1, i2 = n - 1 - w, i1 = n - 1 - 2 * w;
    const double d21 = s[i2] - s[i1];
    const double d32 = s[i3] - s[i2];
    if (d21 == 0 || d32 == 0) continue;
    const double R = d32 / d21;
    if (!(R > 0) || !(R < 1)) continue;
    const double d = (R * static_cast<double>(i3) - static_cast<double>(i1)) / (1.0 - R);
    if (!(static_cast<double>(i1) + d > 0.5)) continue;
    const double A =
        d21 * (static_cast<double>(i1) + d) * (static_cast<double>(i2) + d) / static_cast<double>(w);
    const double S = s[i3] + A / (static_cast<double>(i3) + d);
    double sse = 0;
    std::size_t m = 0;
    for (std::size_t j = n / 2; j < n; ++j, ++m) {
      const double r = s[j] - (S - A / (static_cast<double>(j) + d));
      sse += r * r;
    }
    cands.push_back({S, A, d, std::sqrt(sse / static_cast<double>(std::max<std::size_t>(1, m)))});
  }
  if (cands.empty()) return {};
  double smin = cands[0].S, smax = cands[0].S;
  const Candidate* best = &cands[0];
  for (const auto& c : cands) {
    smin = std::min(smin, c.S);
    smax = std::max(smax, c.S);
    if (c.rms < best->rms) best = &c;
  }
  const double residual = std::max(3.0 * best->rms, smax - smin);
  return {best->S, residual, true};
}

inline int sign_changes_last_quartile(const std::vector<double>& y) {
  const std::size_t n = y.size();
  const std::size_t q = std::max<std::size_t>(2, n / 4);
  int changes = 0;
  double prev = 0;
  bool have_prev = false;
  for (std::size_t i = n - q; i + 1 < n; ++i) {
    const double d = y[i + 1] - y[i];
    if (d == 0) continue;
    if (have_prev && ((d > 0) != (prev > 0))) ++changes;
    prev = d;
    have_prev = true;
  }
  return changes;
}

inline bool quartile_increasing(const std::vector<double>& y) {
  const std::size_t n = y.size();
  const std::size_t q = std::max<std::size_t>(2, n / 4);
  for (std::size_t i = n - q; i + 1 < n; ++i)
    if (!(y[i + 1] > y[i])) return false;
  return true;
}

inline bool quartile_decreasing(const std::vector<double>& y) {
  const std::size_t n = y.size();
  const std::size_t q = std::max<std::size_t>(2, n / 4);
  for (std::size_t i = n - q; i + 1 < n; ++i)
    if (!(y[i + 1] < y[i])) return false;
  return true;
}

// Aitken at machine-level residual is exact (geometric or terminating
// sequences); the algebraic fit's intercept bias would only hurt there.
inline bool aitken_is_exact(const Extrapolant& a) {
  return a.ok && a.residual <= 1e-10 * std::max(1.0, std::fabs(a.value));
}

inline LimitEstimate extrapolate_impl(const std::vector<double>& y,
                                      const std::vector<double>* H) {
  if (y.size() < 8) throw TooFewPoints("extrapolate_limit: need at least 8 points");
  const std::size_t n = y.size();
  const std::size_t q = std::max<std::size_t>(2, n / 4);
  LimitEstimate est;
  auto [lo, hi] = std::minmax_element(y.end() - static_cast<std::ptrdiff_t>(q), y.end());
  est.tail_min = *lo;
  est.tail_max = *hi;

  // Every fit is validated by refitting on a truncated prefix: the reported
  // standard error cannot see model mismatch, but the value drift under
  // truncation can.
  const std::size_t cut = std::max<std::size_t>(4, n / 8);
  const bool can_validate = n - cut >= 8;
  std::vector<double> yp, hp_prefix;
  if (can_validate) {
    yp.assign(y.begin(), y.end() - static_cast<std::ptrdiff_t>(cut));
    if (H) hp_prefix.assign(H->begin(), H->end() - static_cast<std::ptrdiff_t>(cut));
  }
  auto validated = [&](auto&& fit_fn) {
    Extrapolant full = fit_fn(false);
    if (full.ok && can_validate) {
      Extrapolant part = fit_fn(true);
      if (part.ok)
        full.residual = std::max(full.residual, std::fabs(full.value - part.value));
    }
    return full;
  };

  Extrapolant cand = iterated_aitken(y);  // carries its own truncation check
  if (!aitken_is_exact(cand)) {
    Extrapolant fit = validated(
        [&](bool pre) { return fit_algebraic_decay(pre ? yp : y); });
    if (fit.ok && fit.residual < cand.residual) cand = fit;
    Extrapolant inv = validated(
        [&](bool pre) { return fit_inverse_offset(pre ? yp : y); });
    if (inv.ok && inv.residual < cand.residual) cand = inv;
    if (H) {
      Extrapolant hf = validated([&](bool pre) {
        return fit_against_normalizer(pre ? yp : y, pre ? hp_prefix : *H);
      });
      if (hf.ok && hf.residual < cand.residual) cand = hf;
      Extrapolant hp = validated([&](bool pre) {
        return fit_normalizer_power(pre ? yp : y, pre ? hp_prefix : *H);
      });
      if (hp.ok && hp.residual < cand.residual) cand = hp;
    }
  }
  est.value = cand.ok ? cand.value : y.back();
  est.uncertainty = cand.residual;

  // Divergence to +-infinity: a monotone last quartile beyond 1/delta that is
  // still growing by a large fraction of itself.
  const double span = est.tail_max - est.tail_min;
  if (quartile_increasing(y) && y.back() > 1e3 && span > 0.5 * std::fabs(y.back())) {
    est.value = std::numeric_limits<double>::infinity();
    est.uncertainty = std::numeric_limits<double>::infinity();
    return est;
  }
  if (quartile_decreasing(y) && y.back() < -1e3 && span > 0.5 * std::fabs(y.back())) {
    est.value = -std::numeric_limits<double>::infinity();
    est.uncertainty = std::numeric_limits<double>::infinity();
    return est;
  }

  const double scale = std::max(1.0, std::fabs(est.value));
  const bool residual_ok = est.uncertainty < 1e-3 * scale;
  const bool spread_ok = span < 1e-2 * scale;
  est.converged = residual_ok && spread_ok && std::isfinite(est.value);
  est.oscillatory = sign_changes_last_quartile(y) >= 4 && !spread_ok;
  return est;
}

}  // namespace detail

/// Extrapolate the limit of a sequence sampled on a geometric grid.
/// Competes iterated Aitken against an algebraic-decay fit y ~ rho + c k^-p
/// and keeps whichever has the smaller self-consistency residual.
inline LimitEstimate extrapolate_limit(const std::vector<std::pair<double, double>>& pts) {
  std::vector<double> y;
  y.reserve(pts.size());
  for (auto& p : pts) y.push_back(p.second);
  return detail::extrapolate_impl(y, nullptr);
}

inline LimitEstimate extrapolate_limit(const std::vector<double>& y) {
  return detail::extrapolate_impl(y, nullptr);
}

/// Variant used by the order estimators: also fits against the normalizer
/// basis {1, 1/H, 1/(H e^H)}, the correction structure such ratios carry.
inline LimitEstimate extrapolate_with_normalizer(const std::vector<double>& y,
                                                 const std::vector<double>& H) {
  return detail::extrapolate_impl(y, &H);
}

/// Operational "tends to +infinity": last quartile increasing and above 1/delta.
inline bool tends_to_infinity(const std::vector<double>& y) {
  if (y.size() < 8) return false;
  const std::size_t q = std::max<std::size_t>(2, y.size() / 4);
  for (std::size_t i = y.size() - q; i < y.size(); ++i)
    if (!(y[i] > 1e3)) return false;
  return detail::quartile_increasing(y);
}

/// Operational "tends to 0": last quartile of |y| decreasing and below delta.
inline bool tends_to_zero(const std::vector<double>& y) {
  if (y.size() < 8) return false;
  const std::size_t q = std::max<std::size_t>(2, y.size() / 4);
  for (std::size_t i = y.size() - q; i < y.size(); ++i)
    if (!(std::fabs(y[i]) < 1e-3)) return false;
  for (std::size_t i = y.size() - q; i + 1 < y.size(); ++i)
    if (std::fabs(y[i + 1]) > std::fabs(y[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Improper integrals
// ---------------------------------------------------------------------------

/// Integral over [a, infinity), summing geometric panels [a 2^j, a 2^(j+1)].
/// Returns nullopt when the integral is judged divergent: running sum beyond
/// cfg.divergence_bound, panel contributions failing to decrease over 16
/// consecutive panels, or a sub-geometric panel decay consistent with a
/// divergent tail. Slowly convergent tails are resolved by extrapolating the
/// partial-sum sequence.
template <class F>
std::optional<double> integrate_to_infinity(F&& f, double a, const QuadConfig& cfg = {}) {
  if (!(a > 0)) throw std::invalid_argument("integrate_to_infinity: requires a > 0");
  constexpr int kMaxPanels = 200;
  // Panels are integrated well below the requested tolerance so that the
  // partial-sum extrapolation for slowly convergent tails is not noise bound.
  QuadConfig panel_cfg = cfg;
  panel_cfg.abs_tol = std::max(cfg.abs_tol * 1e-4, 1e-280);
  panel_cfg.rel_tol = std::max(cfg.rel_tol * 1e-4, 1e-14);
  std::vector<double> panel_abs;
  std::vector<double> partial;
  double sum = 0.0;
  int nondecreasing_run = 0;
  for (int j = 0; j < kMaxPanels; ++j) {
    const double lo = a * std::pow(2.0, j);
    const double hi = 2.0 * lo;
    const double pj = integrate_finite(f, lo, hi, panel_cfg);
    sum += pj;
    partial.push_back(sum);
    panel_abs.push_back(std::fabs(pj));
    if (std::fabs(sum) > cfg.divergence_bound) return std::nullopt;

    const double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::fabs(sum));
    if (j >= 1) {
      const double prev = panel_abs[static_cast<std::size_t>(j - 1)];
      const double q = prev > 0 ? panel_abs.back() / prev : 0.0;
      if (panel_abs.back() < tol && q < 0.9) {
        const double tail_bound = q < 1.0 ? panel_abs.back() * q / (1.0 - q) : tol;
        if (tail_bound < tol) return sum;
      }
      if (panel_abs.back() >= prev * (1.0 - 1e-12) && panel_abs.back() > tol)
        ++nondecreasing_run;
      else
        nondecreasing_run = 0;
      if (nondecreasing_run >= 16) return std::nullopt;
    }
  }

  // Panel budget exhausted: algebraic regime. Estimate the decay exponent of
  // the panel contributions; sum_j j^-s diverges for s <= 1.
  const std::size_t n = panel_abs.size();
  double sx = 0, sxx = 0, sy = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t j = n / 2; j < n; ++j) {
    if (!(panel_abs[j] > 0)) continue;
    const double lx = std::log(static_cast<double>(j + 1));
    const double ly = std::log(panel_abs[j]);
    sx += lx;
    sxx += lx * lx;
    sy += ly;
    sxy += lx * ly;
    ++m;
  }
  if (m >= 8) {
    const double mm = static_cast<double>(m);
    const double slope = (sxy / mm - sx / mm * sy / mm) / (sxx / mm - (sx / mm) * (sx / mm));
    if (slope >= -1.05) return std::nullopt;  // panels ~ j^-s with s <= 1.05
  }
  // Partial sums of positive panels are monotone; the inverse-offset solve
  // matches their increment structure exactly, with Aitken as fallback.
  std::vector<double> tail_sums(partial.end() - static_cast<std::ptrdiff_t>(std::min<std::size_t>(120, n)),
                                partial.end());
  detail::Extrapolant ex = detail::iterated_aitken(tail_sums);
  detail::Extrapolant inv = detail::fit_inverse_offset(partial);
  if (inv.ok && inv.residual < ex.residual) ex = inv;
  const double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::fabs(ex.value));
  if (ex.ok && ex.residual <= std::max(tol * 10, 1e-8 * std::fabs(ex.value)))
    return ex.value;
  throw DepthExceeded("integrate_to_infinity: tail did not resolve");
}

/// Tabulated running integral H(x_k) = int_a^{x_k} f, each panel integrated
/// once. Monotone nondecreasing for f >= 0 since panel values of the
/// positive-weight rule are nonnegative.
template <class F>
std::vector<std::pair<double, double>> cumulative_integral(F&& f, double a, const Grid& grid,
                                                           const QuadConfig& cfg = {}) {
  const std::vector<double> xs = grid.points();
  if (!(grid.x0 >= a)) throw std::invalid_argument("cumulative_integral: grid.x0 must be >= a");
  std::vector<std::pair<double, double>> table;
  table.reserve(xs.size());
  double acc = integrate_finite(f, a, xs[0], cfg);
  table.emplace_back(xs[0], acc);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    acc += integrate_finite(f, xs[k - 1], xs[k], cfg);
    table.emplace_back(xs[k], acc);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Log-domain quadrature (for integrands far outside double range)
// ---------------------------------------------------------------------------

inline double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

namespace detail {

struct LogPanelEstimate {
  double log_value;
  double log_error;
  double slope;  // max log-variation per unit abscissa, for the noise floor
};

// gk15 on a positive integrand supplied as log f. The panel is scaled by the
// max sampled log before summing.
template <class LogF>
LogPanelEstimate gk15_log(LogF&& lf, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double g[15];
  g[0] = lf(c);
  double gmax = g[0];
  double gmin = g[0];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kGk15Nodes[j];
    g[1 + 2 * j] = lf(c - dx);
    g[2 + 2 * j] = lf(c + dx);
    gmax = std::max({gmax, g[1 + 2 * j], g[2 + 2 * j]});
    gmin = std::min({gmin, g[1 + 2 * j], g[2 + 2 * j]});
  }
  if (gmax == -std::numeric_limits<double>::infinity())
    return {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            0.0};
  double resk = kGk15KronrodW[7] * std::exp(g[0] - gmax);
  double resg = kGk15GaussW[3] * std::exp(g[0] - gmax);
  for (int j = 0; j < 7; ++j) {
    const double s = std::exp(g[1 + 2 * j] - gmax) + std::exp(g[2 + 2 * j] - gmax);
    resk += kGk15KronrodW[j] * s;
    if (j % 2 == 1) resg += kGk15GaussW[j / 2] * s;
  }
  const double lv = gmax + std::log(resk * h);
  const double diff = std::fabs(resk - resg) * h;
  const double le = diff > 0 ? gmax + std::log(diff) : -std::numeric_limits<double>::infinity();
  const double slope = std::isfinite(gmin) && h > 0 ? (gmax - gmin) / (2 * h) : 0.0;
  return {lv, le, slope};
}

}  // namespace detail

namespace detail {

// Adaptive bisection over a span whose integrand scale is already localized;
// panels accept on their own relative error.
template <class LogF>
double log_adaptive_core(LogF&& lf, double a, double b, const QuadConfig& cfg) {
  struct Item {
    double a, b;
    int depth;
  };
  std::vector<Item> stack{{a, b, 0}};
  double total = -std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    LogPanelEstimate p = gk15_log(lf, it.a, it.b);
    // Abscissae near x carry position noise ulp(x); through a log-slope g'
    // this caps the achievable panel accuracy at ~eps |x| g'. Refining past
    // that floor only burns panels.
    const double node_mag = std::max(std::fabs(it.a), std::fabs(it.b));
    const double eff_rel =
        std::max(cfg.rel_tol, 4.0 * 2.22e-16 * node_mag * std::max(p.slope, 0.0));
    const bool accept = p.log_error == -std::numeric_limits<double>::infinity() ||
                        p.log_error <= p.log_value + std::log(eff_rel) ||
                        it.depth >= cfg.max_depth;
    if (it.depth >= cfg.max_depth &&
        p.log_error > p.log_value + std::log(std::max(eff_rel * 1e4, 1e-4)))
      throw DepthExceeded("log quadrature: max_depth reached");
    if (accept) {
      total = logaddexp(total, p.log_value);
    } else {
      const double mid = 0.5 * (it.a + it.b);
      stack.push_back({it.a, mid, it.depth + 1});
      stack.push_back({mid, it.b, it.depth + 1});
    }
    if (++count > 60000) throw DepthExceeded("log quadrature: panel budget exhausted");
  }
  return total;
}

}  // namespace detail

/// log of int_a^b e^{logf(t)} dt for a nonnegative integrand, to relative
/// tolerance cfg.rel_tol. Wide spans are split into dyadic slices from the
/// dominant edge, skipping regions whose bound falls 20 orders below the
/// running total; this keeps integrands like e^t over [0, 1e12] tractable.
template <class LogF>
double log_integrate_finite(LogF&& lf, double a, double b, const QuadConfig& cfg = {}) {
  if (!(a <= b)) throw std::invalid_argument("log_integrate_finite: requires a <= b");
  if (a == b) return -std::numeric_limits<double>::infinity();
  const double w = b - a;
  const double la = lf(a + 1e-3 * w);
  const double lm = lf(a + 0.5 * w);
  const double lb = lf(b - 1e-3 * w);
  const double vmax = std::max({la, lm, lb});
  const double vmin = std::min({la, lm, lb});
  if (!(w > 8.0) || vmax - vmin < 40.0) return detail::log_adaptive_core(lf, a, b, cfg);

  const bool right_heavy = lb >= la;
  double total = -std::numeric_limits<double>::infinity();
  double off = 0.0;
  double step = std::min(2.0, w);
  for (int m = 0; m < 160 && off < w; ++m) {
    const double next = std::min(w, off + step);
    const double lo = right_heavy ? b - next : a + off;
    const double hi = right_heavy ? b - off : a + next;
    if (m >= 2) {
      // bound the remaining contribution by probe values at its near edge
      const double edge = right_heavy ? lf(hi) : lf(lo);
      const double far = right_heavy ? la : lb;
      const double bound = std::max(edge, far) + 3.0 + std::log(w - off);
      if (bound < total + std::log(cfg.rel_tol) - 2.0) return total;
    }
    total = logaddexp(total, detail::log_adaptive_core(lf, lo, hi, cfg));
    off = next;
    step *= 2.0;
  }
  return total;
}

/// log of int_a^inf e^{logf}; nullopt when divergent.
template <class LogF>
std::optional<double> log_integrate_to_infinity(LogF&& lf, double a, const QuadConfig& cfg = {}) {
  if (!(a > 0)) throw std::invalid_argument("log_integrate_to_infinity: requires a > 0");
  double total = -std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();
  int nondecreasing_run = 0;
  for (int j = 0; j < 200; ++j) {
    const double lo = a * std::pow(2.0, j);
    const double lv = log_integrate_finite(lf, lo, 2.0 * lo, cfg);
    total = logaddexp(total, lv);
    if (total > std::log(cfg.divergence_bound)) return std::nullopt;
    if (j >= 1) {
      if (lv >= prev - 1e-12) ++nondecreasing_run;
      else nondecreasing_run = 0;
      if (nondecreasing_run >= 16) return std::nullopt;
      if (lv < total + std::log(cfg.rel_tol) - 1.0 && lv < prev) return total;
    }
    prev = lv;
  }
  throw DepthExceeded("log_integrate_to_infinity: tail did not resolve");
}

/// Running log-integrals log int_a^{x_k} e^{logf} over a grid.
template <class LogF>
std::vector<double> log_cumulative_on_grid(LogF&& lf, double a, const Grid& grid,
                                           const QuadConfig& cfg = {}) {
  const std::vector<double> xs = grid.points();
  std::vector<double> out;
  out.reserve(xs.size());
  double acc = log_integrate_finite(lf, a, xs[0], cfg);
  out.push_back(acc);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    acc = logaddexp(acc, log_integrate_finite(lf, xs[k - 1], xs[k], cfg));
    out.push_back(acc);
  }
  return out;
}

/// Tail log-integrals log int_{x_k}^inf e^{logf} over a grid, assembled from
/// the far end so that small contributions are summed first.
template <class LogF>
std::vector<double> log_tail_on_grid(LogF&& lf, const Grid& grid, const QuadConfig& cfg = {}) {
  const std::vector<double> xs = grid.points();
  std::optional<double> far = log_integrate_to_infinity(lf, xs.back(), cfg);
  if (!far) throw DomainError("log_tail_on_grid: tail integral divergent");
  std::vector<double> out(xs.size());
  out.back() = *far;
  for (std::size_t k = xs.size() - 1; k-- > 0;)
    out[k] = logaddexp(out[k + 1], log_integrate_finite(lf, xs[k], xs[k + 1], cfg));
  return out;
}

}  // namespace orderkit
