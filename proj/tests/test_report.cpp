#include <doctest.h>

#include <cmath>

#include "orderkit/report.hpp"
#include "orderkit/verify.hpp"

using namespace orderkit;

TEST_CASE("run_classify: weighted membership end to end") {
  ClassifyOptions opt;
  opt.expr = "(log(x))^2";
  opt.norm_expr = "1/log(x)";
  opt.anchor = 2.8;
  RunResult r = run_classify(opt);
  CHECK(r.exit_code == 0);
  CHECK(r.report["assumption"] == "A");
  CHECK(r.report["class"] == "m0");
  CHECK(std::fabs(r.report["rho"].get<double>() - 2.0) <= 1e-3);
  CHECK(r.report["converged"] == true);
  CHECK(r.report["member"] == "member");
  CHECK(r.report["checks"]["characterization"]["passed"] == true);
  CHECK(r.report["version"] == kVersion);
}

TEST_CASE("run_classify: auto routing by assumption") {
  ClassifyOptions opt;
  opt.expr = "exp(2*x^0.5)";
  opt.norm_expr = "0.5*x^0.5";
  RunResult r = run_classify(opt);
  CHECK(r.exit_code == 0);
  CHECK(r.report["assumption"] == "B");
  CHECK(r.report["class"] == "m0plus");
  CHECK(std::fabs(r.report["rho"].get<double>() - 2.0) <= 1e-3);
}

TEST_CASE("run_classify: rapid-scale class") {
  ClassifyOptions opt;
  opt.expr = "exp(-0.5*x)*0.5";
  opt.b_expr = "1";
  opt.cls = "m1";
  RunResult r = run_classify(opt);
  CHECK(r.exit_code == 0);
  CHECK(std::fabs(r.report["rho"].get<double>() - (-0.5)) <= 1e-3);
}

TEST_CASE("run_classify: exit codes") {
  ClassifyOptions bad_parse;
  bad_parse.expr = "2*(3";
  CHECK(run_classify(bad_parse).exit_code == 2);

  ClassifyOptions missing;
  missing.expr = "x";
  missing.cls = "m0";
  CHECK(run_classify(missing).exit_code == 2);

  ClassifyOptions domain;
  domain.expr = "log(x-100)";
  CHECK(run_classify(domain).exit_code == 3);

  ClassifyOptions inconclusive;
  inconclusive.expr = "x^2";
  inconclusive.norm_expr = "1/log(x)";
  inconclusive.cls = "m0";
  inconclusive.anchor = std::exp(1.0);
  RunResult r = run_classify(inconclusive);
  CHECK(r.exit_code == 4);
  CHECK(r.report["member"] == "inconclusive");
}

TEST_CASE("run_classify: reports are byte-identical across runs") {
  ClassifyOptions opt;
  opt.expr = "(log(x))^2";
  opt.norm_expr = "1/log(x)";
  opt.anchor = 2.8;
  RunResult a = run_classify(opt);
  RunResult b = run_classify(opt);
  CHECK(a.rendered == b.rendered);
  CHECK(!a.rendered.empty());
}

TEST_CASE("run_classify: csv diagnostics format") {
  ClassifyOptions opt;
  opt.expr = "(log(x))^2";
  opt.norm_expr = "1/log(x)";
  opt.anchor = 2.8;
  opt.format = "csv";
  RunResult r = run_classify(opt);
  CHECK(r.rendered.rfind("k,x,H,logU,ratio\n", 0) == 0);
  // 40 data rows plus the header
  std::size_t lines = 0;
  for (char c : r.rendered)
    if (c == '\n') ++lines;
  CHECK(lines == 41);
}

TEST_CASE("every fixture reproduces its catalogued order through classify") {
  for (const Fixture& f : builtin_fixtures()) {
    CAPTURE(f.name);
    ClassifyOptions opt;
    opt.expr = f.expr;
    switch (f.kind) {
      case NormKind::Log:
        opt.cls = "m";
        break;
      case NormKind::WeightedL:
        opt.cls = f.cls == ClassId::M0Plus ? "m0plus" : "m0";
        opt.norm_expr = f.norm_expr;
        opt.anchor = f.anchor;
        break;
      case NormKind::TailL:
        opt.cls = "m0minus";
        opt.norm_expr = f.norm_expr;
        opt.anchor = f.anchor;
        break;
      case NormKind::SelfNeglectingB:
        opt.cls = "m1";
        opt.b_expr = f.norm_expr;
        break;
    }
    RunResult r = run_classify(opt);
    REQUIRE(r.report.contains("rho"));
    REQUIRE(r.report["rho"].is_number());
    CHECK(std::fabs(r.report["rho"].get<double>() - f.rho) <= f.tol);
    if (f.expect_converged) {
      CHECK(r.exit_code == 0);
    } else {
      CHECK(r.exit_code == 4);
    }
  }
}

TEST_CASE("fixtures listing carries the reference entries") {
  json fx = fixtures_to_json();
  bool has_log_pow = false, has_floor = false, has_sin_tail = false;
  for (const auto& e : fx["fixtures"]) {
    if (e["expr"] == "(log(x))^2" && e["class"] == "m0" && e["rho"] == 2.0) has_log_pow = true;
    if (e["expr"] == "exp(floor(x)*log(x))" && e["class"] == "m1" && e["rho"] == 1.0)
      has_floor = true;
    if (e["expr"] == "exp(-x-0.5*sin(x))" && e["class"] == "m1" && e["rho"] == -1.0)
      has_sin_tail = true;
  }
  CHECK(has_log_pow);
  CHECK(has_floor);
  CHECK(has_sin_tail);

  std::string text = fixtures_to_text();
  CHECK(text.find("log-pow") != std::string::npos);
  CHECK(text.find("normal-density") != std::string::npos);
}

TEST_CASE("verify suites: spot checks") {
  VerifyOptions sn_fail;
  sn_fail.b_expr = "x";
  RunResult r1 = run_verify("sn", sn_fail);
  CHECK(r1.exit_code == 1);

  VerifyOptions sn_ok;
  sn_ok.b_expr = "x/log(x)";
  CHECK(run_verify("sn", sn_ok).exit_code == 0);

  VerifyOptions inv;
  inv.expr = "exp(2*x)";
  inv.b_expr = "1";
  inv.rho = 2.0;
  RunResult r2 = run_verify("inverse", inv);
  CHECK(r2.exit_code == 0);

  VerifyOptions none;
  CHECK(run_verify("no-such-suite", none).exit_code == 2);
}
