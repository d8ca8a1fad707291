// Acceptance suite: one line per criterion, nonzero exit on any failure.
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "orderkit/orderkit.hpp"

using namespace orderkit;

namespace {

const Grid kGrid{10.0, 2.0, 40};
const double kE = std::exp(1.0);
int g_failures = 0;

void report(int n, const std::string& what, bool ok, const std::string& detail = "") {
  std::printf("%s criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", n, what.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) ++g_failures;
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

std::string cli_capture(const std::string& args, int* exit_code) {
  const std::string cmd = std::string(ORDERKIT_CLI_PATH) + " " + args + " 2>/dev/null";
  std::array<char, 4096> buf{};
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) {
    *exit_code = -1;
    return out;
  }
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  *exit_code = WEXITSTATUS(pclose(p));
  return out;
}

void criterion_1() {
  std::string detail;
  bool ok = true;
  OrderEstimate logpow =
      estimate_order_weighted(parse("(log(x))^2"), parse("1/log(x)"), kE, 'A', kGrid);
  ok = ok && near(logpow.rho, 2.0, 1e-6);
  OrderEstimate tail = estimate_order_tail(parse("exp(5*x^(-2))"), parse("2*x^(-2)"), 1.0, kGrid);
  ok = ok && near(tail.rho, 5.0, 1e-6);
  OrderEstimate expd = estimate_order_sn(parse("0.5*exp(-0.5*x)"), parse("1"), kGrid);
  ok = ok && near(expd.rho, -0.5, 1e-3);
  detail = "rho = " + detail::format_double(logpow.rho) + ", " + detail::format_double(tail.rho) +
           ", " + detail::format_double(expd.rho);
  report(1, "exact-ratio fixtures hit their orders", ok, detail);
}

void criterion_2() {
  bool ok = true;
  OrderEstimate root =
      estimate_order_weighted(parse("exp(2*x^0.5)"), parse("0.5*x^0.5"), 0.0, 'B', kGrid);
  ok = ok && near(root.rho, 2.0, 1e-3);
  OrderEstimate bell = estimate_order_sn(parse("exp(-x^2/2)/sqrt(2*pi)"), parse("1/x"), kGrid);
  ok = ok && near(bell.rho, -0.5, 1e-3);
  OrderEstimate floors = estimate_order_sn(parse("exp(floor(x)*log(x))"), parse("1/log(x)"), kGrid);
  ok = ok && near(floors.rho, 1.0, 0.02) && !floors.limit.oscillatory;
  report(2, "convergent-ratio fixtures hit their orders", ok,
         "rho = " + detail::format_double(root.rho) + ", " + detail::format_double(bell.rho) +
             ", " + detail::format_double(floors.rho));
}

void criterion_3() {
  OrderEstimate slow = estimate_order_m(parse("exp(3*(log(x))^0.5)"), kGrid);
  const bool extrapolated_ok = near(slow.rho, 0.0, 0.05);
  const bool raw_fails = std::fabs(slow.ratio.back()) > 0.05;
  report(3, "slow limit needs the extrapolator (raw tail reading fails)",
         extrapolated_ok && raw_fails,
         "rho = " + detail::format_double(slow.rho) +
             ", raw tail = " + detail::format_double(slow.ratio.back()));
}

void criterion_4() {
  bool ok = true;
  std::string first_fail;
  for (const Fixture& f : builtin_fixtures()) {
    if (!f.expect_converged || f.kind == NormKind::TailL) continue;
    OrderEstimate est = estimate_fixture(f, kGrid);
    NormalizerSpec norm = fixture_normalizer(f);
    for (double eps : {0.5, 0.1 * (1.0 + std::fabs(est.rho))}) {
      ClassVerdict cv = characterize(parse(f.expr), norm, est.rho, eps, kGrid);
      ClassVerdict shifted = characterize(parse(f.expr), norm, est.rho + 2 * eps, eps, kGrid);
      bool this_ok = cv.characterization_passed && !shifted.characterization_passed &&
                     cv.x_epsilon.has_value();
      if (!this_ok && first_fail.empty())
        first_fail = f.name + " at eps=" + detail::format_double(eps);
      ok = ok && this_ok;
    }
  }
  report(4, "characterization passes at the estimate and rejects shifted orders", ok, first_fail);
}

void criterion_5() {
  bool ok = true;
  std::string first_fail;
  for (const Fixture& f : builtin_fixtures()) {
    if (f.cls != ClassId::M0 && f.cls != ClassId::M0Minus) continue;
    OrderEstimate est = estimate_fixture(f, kGrid);
    RepresentationDecomposition rep =
        f.cls == ClassId::M0
            ? decompose_representation(parse(f.expr), parse(f.norm_expr), f.anchor, est.rho,
                                       kGrid)
            : decompose_representation_tail(parse(f.expr), parse(f.norm_expr), f.anchor, est.rho,
                                            kGrid);
    const bool this_ok = std::fabs(rep.alpha_ratio_limit.value) <= 1e-2 &&
                         std::fabs(rep.table.back().beta - est.rho) <= 1e-2;
    if (!this_ok && first_fail.empty()) first_fail = f.name;
    ok = ok && this_ok;
  }
  report(5, "representation remainders vanish and beta reaches rho", ok, first_fail);
}

void run_suite_criterion(int n, const std::string& what, const std::string& suite) {
  VerifyOptions opt;
  opt.fixtures = true;
  RunResult r = run_verify(suite, opt);
  std::string first_fail;
  for (const auto& c : r.report["checks"])
    if (!c["passed"].get<bool>()) {
      first_fail = c["name"].get<std::string>();
      break;
    }
  report(n, what, r.exit_code == 0, first_fail);
}

void criterion_9() {
  VerifyOptions opt;
  opt.fixtures = true;
  RunResult sn = run_verify("sn", opt);
  RunResult gamma = run_verify("gamma", opt);
  std::string first_fail;
  for (const RunResult* r : {&sn, &gamma})
    for (const auto& c : r->report["checks"])
      if (first_fail.empty() && !c["passed"].get<bool>()) first_fail = c["name"].get<std::string>();
  report(9, "self-neglecting and shift-class suite", sn.exit_code == 0 && gamma.exit_code == 0,
         first_fail);
}

void criterion_12() {
  NormalizerSpec nb = NormalizerSpec::self_neglecting(parse("1"));
  auto [lo, hi] = estimate_order_bounds(parse("exp(x*(2+cos(log(x))))"), nb, kGrid);
  const bool ok = lo >= 0.9 && lo <= 1.1 && hi >= 2.9 && hi <= 3.1;
  report(12, "O-type bounds bracket the oscillation envelope", ok,
         "[" + detail::format_double(lo) + ", " + detail::format_double(hi) + "]");
}

void criterion_13() {
  ClassifyOptions opt;
  opt.expr = "(log(x))^2";
  opt.norm_expr = "1/log(x)";
  opt.anchor = 2.8;
  const std::string lib_a = run_classify(opt).rendered;
  const std::string lib_b = run_classify(opt).rendered;
  int ec1 = 0, ec2 = 0;
  const std::string args =
      "classify --expr \"(log(x))^2\" --norm-expr \"1/log(x)\" --anchor 2.8 --class auto";
  const std::string cli_a = cli_capture(args, &ec1);
  const std::string cli_b = cli_capture(args, &ec2);
  const bool ok = !lib_a.empty() && lib_a == lib_b && !cli_a.empty() && cli_a == cli_b &&
                  ec1 == 0 && ec2 == 0;
  report(13, "identical flags produce byte-identical reports", ok);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  run_suite_criterion(6, "algebra closure across randomized fixture pairs", "algebra");
  run_suite_criterion(7, "order preserved under the averaging transform", "karamata");
  run_suite_criterion(8, "order transfers to the transform at reciprocal argument", "tauberian");
  criterion_9();
  run_suite_criterion(10, "running integrals of growing-weight members", "w-integrals");
  run_suite_criterion(11, "inverse-function order transfer", "inverse");
  criterion_12();
  criterion_13();
  if (g_failures == 0)
    std::printf("acceptance: all 13 criteria passed\n");
  else
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
