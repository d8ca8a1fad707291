#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "orderkit/inverse.hpp"
#include "orderkit/karamata.hpp"
#include "orderkit/laplace.hpp"
#include "orderkit/report.hpp"

namespace orderkit {

struct VerifyOptions {
  bool fixtures = false;
  std::string expr;
  std::string norm_expr;
  std::string b_expr;
  std::optional<double> anchor;
  std::optional<double> rho;
  double x0 = 10.0;
  double ratio = 2.0;
  int steps = 40;
  std::optional<double> tol;
  std::string format = "json";
};

namespace detail {

struct CheckList {
  json checks = json::array();
  bool all_passed = true;

  void add(const std::string& name, bool passed, json details = json::object()) {
    details["name"] = name;
    details["passed"] = passed;
    checks.push_back(std::move(details));
    all_passed = all_passed && passed;
  }
};

inline std::vector<double> eps_set(double rho) {
  return {0.5, 0.1 * (1.0 + std::fabs(rho))};
}

inline void verify_characterization(CheckList& cl, const VerifyOptions& opt, const Grid& grid,
                                    const QuadConfig& cfg) {
  auto run_one = [&](const std::string& label, const Expr& u, const NormalizerSpec& norm,
                     double rho) {
    for (double eps : eps_set(rho)) {
      ClassVerdict cv = characterize(u, norm, rho, eps, grid, cfg);
      cl.add(label + " sandwich at eps=" + format_double(eps), cv.characterization_passed,
             json{{"x_epsilon", cv.x_epsilon ? json_number(*cv.x_epsilon) : json()}});
      ClassVerdict shifted = characterize(u, norm, rho + 2 * eps, eps, grid, cfg);
      cl.add(label + " shifted rho rejected at eps=" + format_double(eps),
             !shifted.characterization_passed, json{});
      bool finite_xeps = cv.x_epsilon.has_value();
      cl.add(label + " sandwich start found at eps=" + format_double(eps), finite_xeps, json{});
    }
  };
  if (!opt.expr.empty()) {
    Expr u = parse(opt.expr);
    NormalizerSpec norm = opt.b_expr.empty()
                              ? (opt.norm_expr.empty()
                                     ? NormalizerSpec::log_x()
                                     : NormalizerSpec::weighted(parse(opt.norm_expr),
                                                                opt.anchor.value_or(grid.x0)))
                              : NormalizerSpec::self_neglecting(parse(opt.b_expr));
    double rho = opt.rho ? *opt.rho : 0.0;
    if (!opt.rho) {
      NormalizerTable nt = tabulate_normalizer(norm, grid, cfg);
      auto logu = log_u_values(u, nt.x);
      rho = estimate_from_tables(nt.x, logu, nt.h, class_for_kind(norm.kind), norm, nt.warnings)
                .rho;
    }
    run_one("input", u, norm, rho);
    return;
  }
  for (const Fixture& f : builtin_fixtures()) {
    if (!f.expect_converged || f.kind == NormKind::TailL) continue;
    OrderEstimate est = estimate_fixture(f, grid, cfg);
    run_one(f.name, parse(f.expr), fixture_normalizer(f), est.rho);
  }
}

inline void verify_representation(CheckList& cl, const Grid& grid, const QuadConfig& cfg) {
  for (const Fixture& f : builtin_fixtures()) {
    if (f.cls != ClassId::M0 && f.cls != ClassId::M0Minus) continue;
    OrderEstimate est = estimate_fixture(f, grid, cfg);
    RepresentationDecomposition rep =
        f.cls == ClassId::M0
            ? decompose_representation(parse(f.expr), parse(f.norm_expr), f.anchor, est.rho, grid,
                                       cfg)
            : decompose_representation_tail(parse(f.expr), parse(f.norm_expr), f.anchor, est.rho,
                                            grid, cfg);
    const double alpha_lim = std::fabs(rep.alpha_ratio_limit.value);
    const double beta_gap = std::fabs(rep.table.back().beta - est.rho);
    cl.add(f.name + " remainder alpha/H vanishes", alpha_lim <= 1e-2,
           json{{"limit", json_number(rep.alpha_ratio_limit.value)}});
    cl.add(f.name + " beta reaches rho", beta_gap <= 1e-2,
           json{{"beta_end", json_number(rep.table.back().beta)}});
  }
}

inline void verify_karamata(CheckList& cl, const VerifyOptions& opt, const Grid& grid,
                            const QuadConfig& cfg) {
  static constexpr double kAlphas[] = {-3.0, -2.0, 0.0, 1.0, 2.5};
  auto sweep = [&](const std::string& label, const Expr& u, const Expr& l, double a) {
    for (double alpha : kAlphas) {
      ClassVerdict v = verify_karamata_preservation(u, l, a, alpha, grid, cfg);
      cl.add(label + " order preserved at alpha=" + format_double(alpha),
             v.member == ClassVerdict::Membership::Member,
             json{{"rho", json_number(v.order.rho)}});
    }
    bool rejected = false;
    try {
      (void)verify_karamata_preservation(u, l, a, -1.0, grid, cfg);
    } catch (const AlphaMinusOne&) {
      rejected = true;
    }
    cl.add(label + " alpha=-1 rejected", rejected, json{});
  };
  if (!opt.expr.empty()) {
    sweep("input", parse(opt.expr), parse(opt.norm_expr), opt.anchor.value_or(grid.x0));
    return;
  }
  for (const Fixture& f : builtin_fixtures()) {
    if (f.cls != ClassId::M0) continue;
    sweep(f.name, parse(f.expr), parse(f.norm_expr), f.anchor);
  }
}

inline void verify_tauberian(CheckList& cl, const Grid& grid, const QuadConfig& cfg) {
  const double a = std::exp(1.0);
  ClassVerdict v = tauberian_order_check(parse("(log(1+x))^2"), parse("1/log(x)"), a, 2.0, grid,
                                         cfg);
  cl.add("transform of a monotone order-2 function keeps order 2",
         v.member == ClassVerdict::Membership::Member, json{{"rho", json_number(v.order.rho)}});
  ClassVerdict rv = tauberian_order_check(parse("x"), parse("1/log(x)"), a, 1.0, grid, cfg);
  cl.add("regularly varying input stays inconclusive",
         rv.member == ClassVerdict::Membership::Inconclusive, json{});
}

inline void verify_gamma(CheckList& cl, const Grid& grid, const QuadConfig& cfg) {
  GammaVerdict g1 = gamma_ratio_check(parse("exp(x)"), parse("1"), GammaSign::Gamma, grid,
                                      default_y_grid(), cfg);
  cl.add("exp(x) shifts like e^y with unit scale", g1.passed, json{});
  GammaVerdict g2 = gamma_ratio_check(parse("exp(-x^2/2)"), parse("1/x"), GammaSign::GammaMinus,
                                      grid, default_y_grid(), cfg);
  cl.add("bell density shifts like e^-y with scale 1/x", g2.passed, json{});
  GammaVerdict g3 = gamma_ratio_check(parse("exp(floor(x)*log(x))"), parse("1/log(x)"),
                                      GammaSign::Gamma, grid, default_y_grid(), cfg);
  cl.add("integer-step growth rejected", !g3.passed, json{});

  LimitEstimate r1 =
      gamma_integral_equivalence(parse("exp(x)"), parse("1"), 0.0, GammaSign::Gamma, grid, cfg);
  cl.add("running integral of exp(x) tracks b f", std::fabs(r1.value - 1.0) <= 1e-2,
         json{{"ratio", json_number(r1.value)}});
  LimitEstimate r2 = gamma_integral_equivalence(parse("exp(-x)"), parse("1"), 0.0,
                                                GammaSign::GammaMinus, grid, cfg);
  cl.add("tail integral of exp(-x) tracks b f", std::fabs(r2.value - 1.0) <= 1e-2,
         json{{"ratio", json_number(r2.value)}});
  Grid bell{2.0, 1.3, 24};
  LimitEstimate r3 = gamma_integral_equivalence(parse("exp(-x^2/2)"), parse("1/x"), 0.0,
                                                GammaSign::GammaMinus, bell, cfg);
  cl.add("tail integral of the bell density tracks f/x", std::fabs(r3.value - 1.0) <= 1e-2,
         json{{"ratio", json_number(r3.value)}});
}

inline void verify_sn(CheckList& cl, const VerifyOptions& opt, const Grid& grid,
                      const QuadConfig& cfg) {
  if (!opt.b_expr.empty()) {
    GammaVerdict v = is_self_neglecting(parse(opt.b_expr), grid, default_y_grid(), cfg);
    json rows = json::array();
    for (const auto& r : v.rows)
      rows.push_back(json{{"y", json_number(r.y)}, {"ratio", json_number(r.ratio.value)}});
    cl.add("b is self-neglecting", v.passed, json{{"rows", rows}, {"notes", v.notes}});
    return;
  }
  cl.add("constant scale is self-neglecting", is_self_neglecting(parse("1"), grid).passed, json{});
  cl.add("x/log x is self-neglecting", is_self_neglecting(parse("x/log(x)"), grid).passed,
         json{});
  cl.add("identity scale rejected", !is_self_neglecting(parse("x"), grid).passed, json{});
}

inline void verify_w_integrals(CheckList& cl, const Grid& grid, const QuadConfig& cfg) {
  WAnalysis w = analyze_W(parse("0.5*x^0.5"), 2.0, grid, cfg);
  cl.add("W' of the root weight tends to 0", w.finite_alpha && std::fabs(w.alpha) <= 1e-6,
         json{{"alpha", json_number(w.alpha)}});
  NormalizerSpec norm = NormalizerSpec::weighted(parse("0.5*x^0.5"), 0.0);
  ClassVerdict v = integrate_and_classify(parse("exp(2*x^0.5)"), norm, 2.0, 0.0, grid, cfg);
  cl.add("running integral keeps order 2", v.member == ClassVerdict::Membership::Member,
         json{{"rho", json_number(v.order.rho)}});
  LimitEstimate ratio =
      integral_asymptotic_ratio(parse("exp(2*x^0.5)"), parse("0.5*x^0.5"), 2.0, 0.0, grid, cfg);
  cl.add("integral tracks W U / 2", std::fabs(ratio.value - 1.0) <= 1e-2,
         json{{"ratio", json_number(ratio.value)}});
}

inline void verify_inverse(CheckList& cl, const VerifyOptions& opt, const Grid& grid,
                           const QuadConfig& cfg) {
  const std::string expr = opt.expr.empty() ? "exp(2*x)" : opt.expr;
  const std::string b = opt.b_expr.empty() ? "1" : opt.b_expr;
  const double rho = opt.rho.value_or(2.0);
  Expr u = parse(expr);
  ClassVerdict v = inverse_order_check(u, parse(b), rho, grid, cfg);
  cl.add("inverse has order 1/rho", v.member == ClassVerdict::Membership::Member,
         json{{"rho", json_number(v.order.rho)}, {"expected", json_number(1.0 / rho)}});

  double start = 1.0;
  for (int i = 0; i < 200; ++i) {
    SignedLog s = eval_signed_log(u, start);
    if (s.sign > 0 && s.log_abs < std::log(grid.x0)) break;
    start *= 0.5;
  }
  InverseFn inv(u, start);
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> pick(std::log(grid.x0) + 0.1, 25.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double y = std::exp(pick(rng));
    const double x = numeric_inverse(inv, y, 1e-12);
    worst = std::max(worst, std::fabs(std::exp(detail::log_f(u, x) - std::log(y)) - 1.0));
  }
  cl.add("round-trip inversion error within 1e-8", worst <= 1e-8,
         json{{"worst", json_number(worst)}});
}

inline void verify_algebra(CheckList& cl, const Grid& grid, const QuadConfig& cfg) {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> pick(0.5, 3.0);
  const double a_e = std::exp(1.0);
  int cases = 0;
  for (int trial = 0; trial < 7; ++trial) {
    const double alpha = pick(rng), beta = pick(rng);
    // shared reciprocal-log weight
    Expr u = Expr::binary(NodeKind::Pow, Expr::unary(NodeKind::Log, Expr::variable()),
                          Expr::constant(alpha));
    Expr v = Expr::binary(NodeKind::Pow, Expr::unary(NodeKind::Log, Expr::variable()),
                          Expr::constant(beta));
    OrderEstimate prod = estimate_order_weighted(Expr::binary(NodeKind::Mul, u, v),
                                                 parse("1/log(x)"), a_e, 'A', grid, cfg);
    OrderEstimate quot = estimate_order_weighted(Expr::binary(NodeKind::Div, u, v),
                                                 parse("1/log(x)"), a_e, 'A', grid, cfg);
    cl.add("product order adds (weighted, case " + std::to_string(trial) + ")",
           std::fabs(prod.rho - (alpha + beta)) <= 0.02, json{{"rho", json_number(prod.rho)}});
    cl.add("quotient order subtracts (weighted, case " + std::to_string(trial) + ")",
           std::fabs(quot.rho - (alpha - beta)) <= 0.02, json{{"rho", json_number(quot.rho)}});
    cases += 2;

    // growing-weight pair exp(r sqrt x)
    Expr g1 = parse("exp(" + format_double(alpha) + "*x^0.5)");
    Expr g2 = parse("exp(" + format_double(beta) + "*x^0.5)");
    OrderEstimate gp = estimate_order_weighted(Expr::binary(NodeKind::Mul, g1, g2),
                                               parse("0.5*x^0.5"), 0.0, 'B', grid, cfg);
    cl.add("product order adds (growing weight, case " + std::to_string(trial) + ")",
           std::fabs(gp.rho - (alpha + beta)) <= 0.02, json{{"rho", json_number(gp.rho)}});
    ++cases;

    // rapid-scale pair with unit auxiliaries
    Expr m1 = parse("exp(" + format_double(alpha) + "*x)");
    Expr m2 = parse("exp(-" + format_double(beta) + "*x)");
    OrderEstimate mp =
        estimate_order_sn(Expr::binary(NodeKind::Mul, m1, m2), parse("1"), grid, cfg);
    cl.add("rapid-scale orders add (case " + std::to_string(trial) + ")",
           std::fabs(mp.rho - (alpha - beta)) <= 0.02, json{{"rho", json_number(mp.rho)}});
    ++cases;
  }
  cl.add("at least 20 randomized cases exercised", cases >= 20,
         json{{"cases", cases}});

  OrderEstimate comp = estimate_order_weighted(parse("(log(x^3))^2"), parse("1/(3*log(x))"),
                                               std::exp(1.0 / 3.0), 'A', grid, cfg);
  cl.add("composition with x^3 multiplies the order by 3", std::fabs(comp.rho - 6.0) <= 0.02,
         json{{"rho", json_number(comp.rho)}});
}

}  // namespace detail

/// Runs one verification suite. Exit code 0 when every check passes, 1 when
/// any check fails, 2 on usage errors, 3 on domain errors.
inline RunResult run_verify(const std::string& suite, const VerifyOptions& opt) {
  RunResult out;
  json& rep = out.report;
  rep["suite"] = suite;
  rep["version"] = kVersion;
  Grid grid{opt.x0, opt.ratio, opt.steps};
  QuadConfig cfg;
  if (opt.tol) {
    cfg.rel_tol = *opt.tol;
    cfg.abs_tol = *opt.tol * 0.1;
  }
  detail::CheckList cl;
  try {
    grid.points();
    if (suite == "characterization")
      detail::verify_characterization(cl, opt, grid, cfg);
    else if (suite == "representation")
      detail::verify_representation(cl, grid, cfg);
    else if (suite == "karamata")
      detail::verify_karamata(cl, opt, grid, cfg);
    else if (suite == "tauberian")
      detail::verify_tauberian(cl, grid, cfg);
    else if (suite == "gamma")
      detail::verify_gamma(cl, grid, cfg);
    else if (suite == "sn")
      detail::verify_sn(cl, opt, grid, cfg);
    else if (suite == "w-integrals")
      detail::verify_w_integrals(cl, grid, cfg);
    else if (suite == "inverse")
      detail::verify_inverse(cl, opt, grid, cfg);
    else if (suite == "algebra")
      detail::verify_algebra(cl, grid, cfg);
    else
      throw std::invalid_argument("unknown suite '" + suite + "'");
  } catch (const ParseError& e) {
    rep["error"] = json{{"kind", "parse"}, {"message", e.what()}};
    out.exit_code = 2;
    out.rendered = rep.dump(2) + "\n";
    return out;
  } catch (const std::invalid_argument& e) {
    rep["error"] = json{{"kind", "usage"}, {"message", e.what()}};
    out.exit_code = 2;
    out.rendered = rep.dump(2) + "\n";
    return out;
  } catch (const DomainError& e) {
    rep["error"] = json{{"kind", "domain"}, {"message", e.what()}};
    out.exit_code = 3;
    out.rendered = rep.dump(2) + "\n";
    return out;
  } catch (const std::exception& e) {
    cl.add(std::string("suite aborted: ") + e.what(), false, json{});
  }
  rep["checks"] = cl.checks;
  rep["passed"] = cl.all_passed;
  out.exit_code = cl.all_passed ? 0 : 1;
  if (opt.format == "text") {
    std::ostringstream os;
    for (const auto& c : rep["checks"])
      os << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << "\n";
    os << (cl.all_passed ? "all checks passed\n" : "some checks FAILED\n");
    out.rendered = os.str();
  } else {
    out.rendered = rep.dump(2) + "\n";
  }
  return out;
}

}  // namespace orderkit
