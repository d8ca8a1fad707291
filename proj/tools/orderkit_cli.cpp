#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "orderkit/orderkit.hpp"

namespace {

int emit(const orderkit::RunResult& result, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << result.rendered;
  } else {
    std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
    if (!f) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 3;
    }
    f << result.rendered;
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orderkit: numerical classification of the asymptotic order of positive functions"};
  app.require_subcommand(1);

  orderkit::ClassifyOptions copt;
  std::string out_path;
  double anchor = 0.0;
  double tol = 0.0;

  CLI::App* classify = app.add_subcommand("classify", "estimate and certify the order of U(x)");
  classify->add_option("--expr", copt.expr, "expression for U(x)")->required();
  classify->add_option("--norm-expr", copt.norm_expr, "weight expression L(x)");
  classify->add_option("--b-expr", copt.b_expr, "auxiliary scale b(x)");
  CLI::Option* anchor_opt =
      classify->add_option("--anchor", anchor, "lower limit of the running weight integral");
  classify->add_option("--class", copt.cls, "target class")
      ->check(CLI::IsMember({"auto", "m", "m0", "m0minus", "m0plus", "m1"}))
      ->capture_default_str();
  classify->add_option("--x0", copt.x0, "first grid abscissa")->capture_default_str();
  classify->add_option("--ratio", copt.ratio, "grid ratio")->capture_default_str();
  classify->add_option("--steps", copt.steps, "grid length")->capture_default_str();
  CLI::Option* tol_opt = classify->add_option("--tol", tol, "quadrature relative tolerance");
  classify->add_option("--out", out_path, "write the report here instead of stdout");
  classify->add_option("--format", copt.format, "report format")
      ->check(CLI::IsMember({"json", "text", "csv"}))
      ->capture_default_str();

  orderkit::VerifyOptions vopt;
  std::string suite;
  double v_anchor = 0.0, v_rho = 0.0, v_tol = 0.0;
  CLI::App* verify = app.add_subcommand("verify", "run a theorem-verification suite");
  verify
      ->add_option("suite", suite,
                   "one of: characterization, representation, karamata, tauberian, gamma, sn, "
                   "w-integrals, inverse, algebra")
      ->required();
  verify->add_flag("--fixtures", vopt.fixtures, "run against the built-in fixture set");
  verify->add_option("--expr", vopt.expr, "expression for U(x)");
  verify->add_option("--norm-expr", vopt.norm_expr, "weight expression L(x)");
  verify->add_option("--b-expr", vopt.b_expr, "auxiliary scale b(x)");
  CLI::Option* v_anchor_opt = verify->add_option("--anchor", v_anchor, "weight anchor");
  CLI::Option* v_rho_opt = verify->add_option("--rho", v_rho, "declared order");
  verify->add_option("--x0", vopt.x0, "first grid abscissa")->capture_default_str();
  verify->add_option("--ratio", vopt.ratio, "grid ratio")->capture_default_str();
  verify->add_option("--steps", vopt.steps, "grid length")->capture_default_str();
  CLI::Option* v_tol_opt = verify->add_option("--tol", v_tol, "quadrature relative tolerance");
  verify->add_option("--out", out_path, "write the report here instead of stdout");
  verify->add_option("--format", vopt.format, "report format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();

  std::string fx_format = "text";
  CLI::App* fixtures = app.add_subcommand("fixtures", "list the built-in fixtures");
  fixtures->add_option("--format", fx_format, "listing format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  fixtures->add_option("--out", out_path, "write the listing here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  if (classify->parsed()) {
    if (anchor_opt->count()) copt.anchor = anchor;
    if (tol_opt->count()) copt.tol = tol;
    return emit(orderkit::run_classify(copt), out_path);
  }
  if (verify->parsed()) {
    if (v_anchor_opt->count()) vopt.anchor = v_anchor;
    if (v_rho_opt->count()) vopt.rho = v_rho;
    if (v_tol_opt->count()) vopt.tol = v_tol;
    return emit(orderkit::run_verify(suite, vopt), out_path);
  }
  if (fixtures->parsed()) {
    orderkit::RunResult r;
    r.exit_code = 0;
    r.rendered = fx_format == "json" ? orderkit::fixtures_to_json().dump(2) + "\n"
                                     : orderkit::fixtures_to_text();
    return emit(r, out_path);
  }
  return 2;
}
