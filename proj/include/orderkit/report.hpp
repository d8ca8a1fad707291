#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orderkit/classes.hpp"
#include "orderkit/expr.hpp"
#include "orderkit/fixtures.hpp"
#include "orderkit/numerics.hpp"
#include "orderkit/version.hpp"

namespace orderkit {

// nlohmann::json objects are backed by std::map, so keys serialize sorted and
// repeated runs with the same inputs are byte-identical.
using json = nlohmann::json;

/// JSON cannot carry IEEE specials; they are spelled out instead.
inline json json_number(double v) {
  if (std::isnan(v)) return json("nan");
  if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
  return json(v);
}

inline json limit_to_json(const LimitEstimate& le) {
  return json{{"value", json_number(le.value)},       {"uncertainty", json_number(le.uncertainty)},
              {"converged", le.converged},            {"oscillatory", le.oscillatory},
              {"tail_min", json_number(le.tail_min)}, {"tail_max", json_number(le.tail_max)}};
}

inline const char* membership_name(ClassVerdict::Membership m) {
  switch (m) {
    case ClassVerdict::Membership::Member: return "member";
    case ClassVerdict::Membership::NonMember: return "non-member";
    case ClassVerdict::Membership::Inconclusive: return "inconclusive";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

struct ClassifyOptions {
  std::string expr;
  std::string norm_expr;  // weight L ("" when absent)
  std::string b_expr;     // auxiliary b ("" when absent)
  std::optional<double> anchor;
  std::string cls = "auto";  // auto|m|m0|m0minus|m0plus|m1
  double x0 = 10.0;
  double ratio = 2.0;
  int steps = 40;
  std::optional<double> tol;
  std::string format = "json";  // json|text|csv
};

struct RunResult {
  int exit_code = 0;
  json report;
  std::string rendered;
};

namespace detail {

inline std::string render_text(const json& rep) {
  std::ostringstream os;
  os << "class:       " << rep.value("class", std::string("?")) << "\n";
  if (rep.contains("assumption") && !rep["assumption"].is_null())
    os << "assumption:  " << rep["assumption"].get<std::string>() << "\n";
  auto num = [&](const char* key) {
    if (!rep.contains(key)) return std::string("-");
    const json& v = rep[key];
    return v.is_string() ? v.get<std::string>() : format_double(v.get<double>());
  };
  os << "rho:         " << num("rho") << "  [" << num("rho_lower") << ", " << num("rho_upper")
     << "]\n";
  os << "converged:   " << (rep.value("converged", false) ? "yes" : "no") << "\n";
  os << "oscillatory: " << (rep.value("oscillatory", false) ? "yes" : "no") << "\n";
  os << "verdict:     " << rep.value("member", std::string("?")) << "\n";
  if (rep.contains("warnings"))
    for (const auto& w : rep["warnings"]) os << "warning:     " << w.get<std::string>() << "\n";
  return os.str();
}

inline std::string render_csv(const OrderEstimate& est) {
  std::ostringstream os;
  os << "k,x,H,logU,ratio\n";
  for (std::size_t k = 0; k < est.x.size(); ++k)
    os << k << ',' << format_double(est.x[k]) << ',' << format_double(est.h[k]) << ','
       << format_double(est.log_u[k]) << ',' << format_double(est.ratio[k]) << "\n";
  return os.str();
}

inline void finish(RunResult& out, const ClassifyOptions& opt, const OrderEstimate* est) {
  if (opt.format == "csv" && est)
    out.rendered = render_csv(*est);
  else if (opt.format == "text")
    out.rendered = render_text(out.report);
  else
    out.rendered = out.report.dump(2) + "\n";
}

}  // namespace detail

/// The classify pipeline behind the command line: assumption check, the
/// estimator matching the requested class, and the sandwich verification at
/// the default epsilon set. Exit codes: 0 certified member, 2 parse error,
/// 3 domain error, 4 inconclusive.
inline RunResult run_classify(const ClassifyOptions& opt) {
  RunResult out;
  json& rep = out.report;
  rep["version"] = kVersion;
  rep["input"] = json{{"expr", opt.expr},
                      {"norm_expr", opt.norm_expr},
                      {"b_expr", opt.b_expr},
                      {"anchor", opt.anchor ? json_number(*opt.anchor) : json()},
                      {"class", opt.cls},
                      {"grid", json{{"x0", opt.x0}, {"ratio", opt.ratio}, {"steps", opt.steps}}},
                      {"tol", opt.tol ? json_number(*opt.tol) : json()}};
  rep["warnings"] = json::array();

  Grid grid{opt.x0, opt.ratio, opt.steps};
  QuadConfig cfg;
  if (opt.tol) {
    cfg.rel_tol = *opt.tol;
    cfg.abs_tol = *opt.tol * 0.1;
  }

  try {
    grid.points();  // validates
    if (opt.expr.empty()) throw std::invalid_argument("--expr is required");
    Expr u = parse(opt.expr);

    std::string cls = opt.cls;
    if (cls == "auto") {
      if (!opt.b_expr.empty()) cls = "m1";
      else if (opt.norm_expr.empty()) cls = "m";
    }

    std::optional<AssumptionVerdict> assumption;
    if (!opt.norm_expr.empty()) {
      Expr l = parse(opt.norm_expr);
      const double a = opt.anchor.value_or(opt.x0);
      assumption = check_assumption(l, a, grid, cfg);
      rep["assumption"] =
          assumption->label == 'N' ? std::string("none") : std::string(1, assumption->label);
      for (const auto& w : assumption->warnings) rep["warnings"].push_back(w);
      if (cls == "auto") {
        switch (assumption->label) {
          case 'A': cls = "m0"; break;
          case 'B': cls = "m0plus"; break;
          case 'C': cls = "m0minus"; break;
          default:
            cls = "m";
            rep["warnings"].push_back("weight fits no assumption; falling back to the plain order");
        }
      }
    }

    OrderEstimate est;
    NormalizerSpec norm = NormalizerSpec::log_x();
    const double a = opt.anchor.value_or(opt.x0);
    if (cls == "m") {
      est = estimate_order_m(u, grid, cfg);
    } else if (cls == "m0" || cls == "m0plus") {
      if (opt.norm_expr.empty()) throw std::invalid_argument("--norm-expr is required for " + cls);
      Expr l = parse(opt.norm_expr);
      const char label = cls == "m0" ? 'A' : 'B';
      if (assumption && assumption->label != label)
        rep["warnings"].push_back(std::string("weight behaves like assumption ") +
                                  assumption->label + " rather than " + label);
      est = estimate_order_weighted(u, l, a, label, grid, cfg);
      norm = est.normalizer;
    } else if (cls == "m0minus") {
      if (opt.norm_expr.empty()) throw std::invalid_argument("--norm-expr is required for m0minus");
      est = estimate_order_tail(u, parse(opt.norm_expr), a, grid, cfg);
      norm = est.normalizer;
    } else if (cls == "m1") {
      if (opt.b_expr.empty()) throw std::invalid_argument("--b-expr is required for m1");
      est = estimate_order_sn(u, parse(opt.b_expr), grid, cfg);
      norm = est.normalizer;
    } else {
      throw std::invalid_argument("unknown class '" + cls + "'");
    }
    if (cls == "m") norm = NormalizerSpec::log_x();

    rep["class"] = cls;
    rep["rho"] = json_number(est.rho);
    rep["rho_lower"] = json_number(est.rho_lower);
    rep["rho_upper"] = json_number(est.rho_upper);
    rep["converged"] = est.limit.converged;
    rep["oscillatory"] = est.limit.oscillatory;
    rep["uncertainty"] = json_number(est.limit.uncertainty);
    for (const auto& w : est.warnings) rep["warnings"].push_back(w);

    bool member = est.limit.converged && std::isfinite(est.rho);
    json checks;
    if (std::isfinite(est.rho) && est.limit.converged) {
      if (cls == "m0minus") {
        LimitEstimate ratio = check_m0minus_ratio(u, parse(opt.norm_expr), a, grid, cfg);
        const double agree = std::max(2.0 * (ratio.uncertainty + est.limit.uncertainty), 5e-3);
        const bool ok = std::fabs(ratio.value - est.rho) <= agree;
        checks["m0minus_ratio"] =
            json{{"value", json_number(ratio.value)}, {"agrees", ok}};
        member = member && ok;
      } else {
        json eps_list = json::array();
        bool all_passed = true;
        std::optional<double> x_eps;
        for (double eps : {0.5, 0.1 * (1.0 + std::fabs(est.rho))}) {
          ClassVerdict cv = characterize(u, norm, est.rho, eps, grid, cfg);
          all_passed = all_passed && cv.characterization_passed;
          if (!x_eps) x_eps = cv.x_epsilon;
          eps_list.push_back(json{{"eps", json_number(eps)},
                                  {"passed", cv.characterization_passed},
                                  {"x_epsilon", cv.x_epsilon ? json_number(*cv.x_epsilon) : json()}});
        }
        checks["characterization"] = json{{"passed", all_passed}, {"epsilons", eps_list}};
        member = member && all_passed;
      }
    } else {
      member = false;
    }
    rep["checks"] = checks;
    rep["member"] = member ? "member" : (est.limit.converged ? "non-member" : "inconclusive");
    out.exit_code = member ? 0 : 4;
    detail::finish(out, opt, &est);
    return out;
  } catch (const ParseError& e) {
    rep["error"] = json{{"kind", "parse"}, {"message", e.what()}, {"position", e.position()}};
    out.exit_code = 2;
  } catch (const std::invalid_argument& e) {
    rep["error"] = json{{"kind", "usage"}, {"message", e.what()}};
    out.exit_code = 2;
  } catch (const DomainError& e) {
    rep["error"] = json{{"kind", "domain"}, {"message", e.what()}};
    out.exit_code = 3;
  } catch (const std::exception& e) {
    rep["error"] = json{{"kind", "inconclusive"}, {"message", e.what()}};
    out.exit_code = 4;
  }
  detail::finish(out, opt, nullptr);
  return out;
}

// ---------------------------------------------------------------------------
// fixtures listing
// ---------------------------------------------------------------------------

inline json fixtures_to_json() {
  json arr = json::array();
  for (const Fixture& f : builtin_fixtures()) {
    json entry{{"name", f.name},
               {"expr", f.expr},
               {"class", class_id_name(f.cls)},
               {"rho", json_number(f.rho)},
               {"tol", json_number(f.tol)},
               {"expect_converged", f.expect_converged},
               {"note", f.note}};
    switch (f.kind) {
      case NormKind::Log:
        entry["normalizer"] = "log";
        break;
      case NormKind::WeightedL:
        entry["normalizer"] = "weighted";
        entry["norm_expr"] = f.norm_expr;
        entry["anchor"] = json_number(f.anchor);
        break;
      case NormKind::TailL:
        entry["normalizer"] = "tail";
        entry["norm_expr"] = f.norm_expr;
        entry["anchor"] = json_number(f.anchor);
        break;
      case NormKind::SelfNeglectingB:
        entry["normalizer"] = "self-neglecting";
        entry["b_expr"] = f.norm_expr;
        break;
    }
    arr.push_back(entry);
  }
  return json{{"fixtures", arr}, {"version", kVersion}};
}

inline std::string fixtures_to_text() {
  std::ostringstream os;
  for (const Fixture& f : builtin_fixtures()) {
    os << f.name << "\n  U      = " << f.expr << "\n";
    if (f.kind == NormKind::SelfNeglectingB)
      os << "  b      = " << f.norm_expr << "\n";
    else if (f.kind != NormKind::Log)
      os << "  L      = " << f.norm_expr << "  (anchor " << detail::format_double(f.anchor)
         << (f.kind == NormKind::TailL ? ", tail form" : "") << ")\n";
    os << "  class  = " << class_id_name(f.cls) << ", rho = " << detail::format_double(f.rho)
       << " (tol " << detail::format_double(f.tol) << ")\n";
    os << "  note   : " << f.note << "\n";
  }
  return os.str();
}

}  // namespace orderkit
