#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "ruinmc/errors.hpp"
#include "ruinmc/hazard.hpp"
#include "ruinmc/tuning.hpp"

using namespace ruinmc;

namespace {

// Selection runs the Lyapunov probe (slow for the Weibull tail); share one
// instance across test cases.
const TuningParams& mg1_se() {
  static MG1Pareto m;
  static TuningParams p = select_variance_params(m, Mode::StrongEfficiency);
  return p;
}

const TuningParams& wei_se() {
  static WeibullType m;
  static TuningParams p = select_variance_params(m, Mode::StrongEfficiency);
  return p;
}

// Step-V margin, written out independently of the implementation.
double delta2_formula(double iota, double d0, double ass) {
  return 2.0 * (iota - 1.0) * (1.0 - d0) * (1.0 - d0) / std::pow(1.0 + d0, 5) *
             std::exp(-ass) -
         1.0 - 2.0 * (1.0 - std::exp(-2.0 * ass / iota)) * (iota - 1.0);
}

double gamma_delta2_formula(double iota, double gamma, double delta,
                            double ass) {
  return (1.0 + gamma) * (iota - 1.0) * std::pow(1.0 - delta, 3) *
             std::exp(-ass) / (gamma * (1.0 + delta)) -
         1.0 - (1.0 + gamma) * (1.0 - std::exp(-2.0 * ass / iota)) *
                   (iota - 1.0);
}

double kappa_step_floor(const TuningParams& p) {
  return std::exp(2.0 * p.a_star_star) /
         (4.0 * p.theta * p.theta * p.delta0);
}

}  // namespace

TEST_CASE("cutoff grid from the concavity lemma") {
  CutoffGrid g = build_cutoff_grid(0.5);
  CHECK(g.sigma1 == 0.5);
  CHECK(g.k == 4);
  REQUIRE(g.a_grid.size() == 3);
  CHECK(g.a_grid[0] == 0.25);
  CHECK(g.a_grid[1] == 0.5);
  CHECK(g.a_grid[2] == 0.75);
  CHECK(g.sigma2 ==
        doctest::Approx(std::sqrt(0.25) + std::sqrt(0.5) - 1.0).epsilon(1e-12));
  // 2 − 2(1−x)^β₀ − x^β₀ ≤ 0 on [0, σ₁], checked on an independent lattice.
  for (int i = 0; i <= 2000; ++i) {
    double x = g.sigma1 * static_cast<double>(i) / 2000.0;
    CHECK(2.0 - 2.0 * std::pow(1.0 - x, 0.5) - std::pow(x, 0.5) <= 1e-15);
  }
  // a_j^β₀ + (1−a_{j+1})^β₀ ≥ 1 + σ₂ with σ₂ the attained minimum.
  double worst = kInf;
  for (size_t j = 0; j + 1 < g.a_grid.size(); ++j) {
    double v = std::pow(g.a_grid[j], 0.5) +
               std::pow(1.0 - g.a_grid[j + 1], 0.5);
    CHECK(v >= 1.0 + g.sigma2 - 1e-12);
    worst = std::min(worst, v);
  }
  CHECK(worst - 1.0 == doctest::Approx(g.sigma2).epsilon(1e-14));

  CutoffGrid g2 = build_cutoff_grid(0.05);
  CHECK(g2.sigma1 == 0.5);
  CHECK(g2.k == 4);
  CHECK(g2.sigma2 ==
        doctest::Approx(std::pow(0.25, 0.05) + std::pow(0.5, 0.05) - 1.0)
            .epsilon(1e-12));
  CHECK(g2.sigma2 == doctest::Approx(0.8989693205).epsilon(1e-9));

  CHECK_THROWS_AS((void)build_cutoff_grid(0.9), std::runtime_error);
  CHECK_THROWS_AS((void)build_cutoff_grid(1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)build_cutoff_grid(0.0), std::invalid_argument);
}

TEST_CASE("step-IV constants for the built-in models") {
  const TuningParams& pm = mg1_se();
  CHECK(pm.mode == Mode::StrongEfficiency);
  CHECK(pm.k == 0);  // regularly varying path: grid unused
  CHECK(pm.theta ==
        doctest::Approx((2.0 / 3.0) * 0.9 / std::pow(1.1, 5)).epsilon(1e-14));
  CHECK(pm.eps_tilde == 0.1 * 0.1);
  CHECK(pm.eps_tilde1 == 0.1);
  CHECK(pm.delta1 == doctest::Approx(0.00693977921).epsilon(1e-9));
  CHECK(pm.kappa >= kappa_step_floor(pm));
  CHECK(pm.kappa == doctest::Approx(2816.003729).epsilon(1e-8));
  CHECK(pm.eta_star >= 10.0 * (2.0 / 3.0));
  CHECK(pm.eta_star == doctest::Approx(8.607789027).epsilon(1e-8));
  MG1Pareto mg1;
  CHECK(mg1.log_integrated_tail(pm.eta_star) ==
        doctest::Approx(-0.5 * std::log(pm.kappa)).epsilon(1e-9));

  const TuningParams& pw = wei_se();
  CHECK(pw.k == 4);
  CHECK(pw.sigma1 == 0.5);
  CHECK(pw.eps_tilde1 == doctest::Approx(0.1 / 5.0).epsilon(1e-15));
  CHECK(pw.theta ==
        doctest::Approx(0.5 * 0.9 / std::pow(1.1, 5)).epsilon(1e-14));
  CHECK(pw.kappa >= kappa_step_floor(pw));
  // The concave tail needs an extreme threshold before the componentwise
  // Lyapunov bounds hold pointwise; selection keeps doubling until they do.
  CHECK(pw.kappa == doctest::Approx(7.068830078e222).epsilon(1e-8));
  CHECK(pw.eta_star == doctest::Approx(17086.93729).epsilon(1e-8));
  WeibullType wei;
  CHECK(wei.log_integrated_tail(pw.eta_star) ==
        doctest::Approx(-0.5 * std::log(pw.kappa)).epsilon(1e-10));

  // User kappa is honored verbatim, no floor and no doubling.
  UserOverrides ov;
  ov.kappa = 1e16;
  TuningParams pu = select_variance_params(wei, Mode::StrongEfficiency, ov);
  CHECK(pu.kappa == 1e16);
  CHECK(wei.log_integrated_tail(pu.eta_star) ==
        doctest::Approx(-0.5 * std::log(1e16)).epsilon(1e-10));
  CHECK(pu.eta_star > 100.0);
  CHECK(pu.eta_star < 115.0);

  UserOverrides od;
  od.delta0 = 0.2;
  TuningParams pd = select_variance_params(mg1, Mode::StrongEfficiency, od);
  CHECK(pd.delta0 == 0.2);
  CHECK(pd.theta ==
        doctest::Approx((2.0 / 3.0) * 0.8 / std::pow(1.2, 5)).epsilon(1e-14));
  CHECK(pd.eps_tilde == doctest::Approx(0.04).epsilon(1e-15));

  // E T < E V: positive drift is rejected before tuning can even start.
  CHECK_THROWS_AS((void)MG1Pareto(2.5, 0.5), std::invalid_argument);
}

TEST_CASE("total-variation mode constants") {
  MG1Pareto m;
  UserOverrides ov;
  ov.epsilon = 0.05;
  TuningParams p = select_variance_params(m, Mode::TotalVariation, ov);
  CHECK(p.mode == Mode::TotalVariation);
  CHECK(p.epsilon == 0.05);
  CHECK(p.theta == doctest::Approx((2.0 / 3.0) * 0.95 / 2.0).epsilon(1e-14));
  CHECK(p.eps_tilde == 0.05);
  CHECK(p.eps_tilde1 == doctest::Approx(0.0025).epsilon(1e-15));
  CHECK(p.kappa >= kappa_step_floor(p));
  CHECK(p.kappa == doctest::Approx(1948.830994).epsilon(1e-8));
  CHECK(p.eta_star == doctest::Approx(7.380590588).epsilon(1e-8));

  CHECK_THROWS_AS((void)select_variance_params(m, Mode::TotalVariation),
                  std::invalid_argument);
  UserOverrides bad;
  bad.epsilon = 1.2;
  CHECK_THROWS_AS((void)select_variance_params(m, Mode::TotalVariation, bad),
                  std::invalid_argument);
}

TEST_CASE("termination margin enforcement") {
  MG1Pareto m;
  TuningParams pt = enforce_termination_params(mg1_se(), m);
  CHECK(pt.mode == Mode::TerminationControlled);
  // iota = 2.5 needs no halvings: delta2 > 0 at the defaults.
  CHECK(pt.delta0 == 0.1);
  CHECK(pt.a_star_star == 0.1);
  CHECK(pt.delta2 ==
        doctest::Approx(delta2_formula(2.5, 0.1, 0.1)).epsilon(1e-12));
  CHECK(pt.delta2 == doctest::Approx(0.1346028568).epsilon(1e-9));
  CHECK(pt.kappa == mg1_se().kappa);  // untouched when nothing changed

  // Limit a_**, δ₀* → 0: the margin tends to 2(ι−1) − 1.
  CHECK(delta2_formula(2.5, 1e-9, 1e-9) == doctest::Approx(2.0).epsilon(1e-6));

  MG1Pareto m18(1.8);
  TuningParams p18 =
      select_variance_params(m18, Mode::TerminationControlled);
  CHECK(p18.delta0 == 0.025);
  CHECK(p18.a_star_star == 0.025);
  CHECK(p18.delta2 > 0.0);
  CHECK(p18.delta2 ==
        doctest::Approx(delta2_formula(1.8, p18.delta0, p18.a_star_star))
            .epsilon(1e-12));
  CHECK(p18.delta2 == doctest::Approx(0.2673176034).epsilon(1e-9));
  // One halving earlier the margin was still nonpositive: the loop stopped
  // at the first qualifying pair.
  CHECK(delta2_formula(1.8, 2.0 * p18.delta0, 2.0 * p18.a_star_star) <= 0.0);
  // theta re-derived from the shrunk delta0 (mu = -1/12 at iota 1.8).
  CHECK(p18.theta ==
        doctest::Approx((1.0 / 12.0) * 0.975 / std::pow(1.025, 5))
            .epsilon(1e-13));
  CHECK(p18.kappa == doctest::Approx(65231.38762).epsilon(1e-8));
  CHECK(p18.eta_star == doctest::Approx(1347.167891).epsilon(1e-8));

  MG1Pareto m16(1.6, 2.0);
  TuningParams p16 =
      select_variance_params(m16, Mode::TerminationControlled);
  CHECK(p16.delta0 == 0.0125);
  CHECK(p16.delta2 ==
        doctest::Approx(delta2_formula(1.6, p16.delta0, p16.a_star_star))
            .epsilon(1e-12));
  CHECK(p16.delta2 == doctest::Approx(0.06745021134).epsilon(1e-9));

  // Below iota = 1.5 the limit 2(ι−1)−1 is nonpositive: no selection exists.
  MG1Pareto m14(1.4, 3.0);
  CHECK_THROWS_AS(
      (void)select_variance_params(m14, Mode::TerminationControlled),
      std::runtime_error);
  WeibullType wei;
  CHECK_THROWS_AS((void)enforce_termination_params(wei_se(), wei),
                  std::invalid_argument);
}

TEST_CASE("gamma-moment selection and its admissible range") {
  MG1Pareto m(1.4, 3.0);
  CHECK(m.mean_drift() == doctest::Approx(-0.5).epsilon(1e-12));

  TuningParams p5 = select_gamma_params(m, 0.5);
  CHECK(p5.mode == Mode::GammaMoment);
  CHECK(p5.gamma == 0.5);
  CHECK(p5.delta0 == 0.025);
  CHECK(p5.a_star_star == 0.0125);
  CHECK(p5.delta2 ==
        doctest::Approx(gamma_delta2_formula(1.4, 0.5, p5.delta0,
                                             p5.a_star_star))
            .epsilon(1e-12));
  CHECK(p5.delta2 == doctest::Approx(0.06100509507).epsilon(1e-9));
  CHECK(gamma_delta2_formula(1.4, 0.5, 2.0 * p5.delta0, p5.delta0) <= 0.0);
  CHECK(p5.theta ==
        doctest::Approx(0.5 * 0.975 * 0.975 / (0.5 * 1.025)).epsilon(1e-13));
  CHECK(p5.kappa >= kappa_step_floor(p5));
  CHECK(p5.kappa == doctest::Approx(11.92028475).epsilon(1e-8));
  CHECK(p5.eta_star == doctest::Approx(610.7071392).epsilon(1e-8));
  CHECK(m.log_integrated_tail(p5.eta_star) ==
        doctest::Approx(-std::log(p5.kappa) / 1.5).epsilon(1e-9));

  UserOverrides g3;
  g3.gamma = 0.3;
  TuningParams p3 = select_variance_params(m, Mode::GammaMoment, g3);
  CHECK(p3.gamma == 0.3);
  CHECK(p3.theta == doctest::Approx(0.5 * 0.81 / (0.3 * 1.1)).epsilon(1e-13));
  CHECK(p3.a_star_star == 0.05);
  CHECK(p3.delta2 == doctest::Approx(0.05685582799).epsilon(1e-9));
  CHECK(p3.kappa == doctest::Approx(3.668742965).epsilon(1e-8));
  CHECK(p3.eta_star == doctest::Approx(116.4043082).epsilon(1e-8));

  // gamma must stay below (iota−1)/(2−iota) = 2/3; the bound is strict.
  CHECK_THROWS_AS((void)select_gamma_params(m, 0.7), std::invalid_argument);
  CHECK_THROWS_AS((void)select_gamma_params(m, 2.0 / 3.0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)select_gamma_params(m, 0.0), std::invalid_argument);
  MG1Pareto m25;
  CHECK_THROWS_AS((void)select_gamma_params(m25, 0.5), std::invalid_argument);
  WeibullType wei;
  CHECK_THROWS_AS((void)select_gamma_params(wei, 0.5), std::invalid_argument);
  CHECK_THROWS_AS((void)select_variance_params(m, Mode::GammaMoment),
                  std::invalid_argument);
}

TEST_CASE("default state grid and the Lyapunov function") {
  MG1Pareto m;
  const TuningParams& p = mg1_se();
  const double b = 100.0;
  std::vector<double> grid = make_default_s_grid(m, p, b);
  REQUIRE(grid.size() == 50);
  int nominal = 0, is = 0;
  for (double s : grid) {
    CHECK(s < b);
    (b - s <= p.eta_star * (1.0 + 1e-12)) ? ++nominal : ++is;
  }
  CHECK(nominal == 10);
  CHECK(is == 40);
  // Deepest point: b − max(4b, 10η) = −300 here.
  CHECK(*std::min_element(grid.begin(), grid.end()) ==
        doctest::Approx(-300.0).epsilon(1e-12));

  CHECK(log_g(m, p, b, b - 0.5 * p.eta_star) == 0.0);
  double s2 = b - 2.0 * p.eta_star;
  CHECK(log_g(m, p, b, s2) < 0.0);
  CHECK(log_g(m, p, b, s2) ==
        doctest::Approx(std::log(p.kappa) +
                        2.0 * m.log_integrated_tail(b - s2))
            .epsilon(1e-12));
}

TEST_CASE("Lyapunov verifier on defaults and on sabotaged kappa") {
  MG1Pareto mg1;
  WeibullType wei;
  const TuningParams& pm = mg1_se();
  const TuningParams& pw = wei_se();

  VerificationReport r100 =
      verify_lyapunov(mg1, pm, 100.0, make_default_s_grid(mg1, pm, 100.0));
  CHECK(r100.kind == "lyapunov");
  CHECK(r100.passed);
  CHECK(r100.max_ratio <= 1.0 + 1e-6);
  CHECK(r100.max_ratio == doctest::Approx(0.9982238214).epsilon(1e-6));
  CHECK(r100.checked_points == 40);
  CHECK(r100.total_points == 50);
  CHECK(r100.notes.empty());

  VerificationReport r1k =
      verify_lyapunov(mg1, pm, 1000.0, make_default_s_grid(mg1, pm, 1000.0));
  CHECK(r1k.passed);
  CHECK(r1k.max_ratio == doctest::Approx(0.9997823814).epsilon(1e-6));

  VerificationReport w100 =
      verify_lyapunov(wei, pw, 100.0, make_default_s_grid(wei, pw, 100.0));
  CHECK(w100.passed);
  CHECK(w100.max_ratio == doctest::Approx(0.9999933945).epsilon(1e-6));

  // Near-boundary and out-of-range states are skipped, not failed.
  std::vector<double> tiny{101.0, 100.0, 100.0 - 0.5 * pm.eta_star,
                           100.0 - 2.0 * pm.eta_star};
  VerificationReport rt = verify_lyapunov(mg1, pm, 100.0, tiny);
  CHECK(rt.total_points == 4);
  CHECK(rt.checked_points == 1);
  CHECK(rt.passed);

  // kappa at 1/100 of its selected value violates the pointwise inequality.
  UserOverrides sab;
  sab.kappa = pm.kappa / 100.0;
  TuningParams pms = select_variance_params(mg1, Mode::StrongEfficiency, sab);
  VerificationReport rs =
      verify_lyapunov(mg1, pms, 100.0, make_default_s_grid(mg1, pms, 100.0));
  CHECK(!rs.passed);
  CHECK(rs.max_ratio > 1.0 + 1e-6);
  CHECK(rs.max_ratio == doctest::Approx(2.519501279).epsilon(1e-6));

  UserOverrides sabw;
  sabw.kappa = pw.kappa / 100.0;
  TuningParams pws = select_variance_params(wei, Mode::StrongEfficiency, sabw);
  VerificationReport ws =
      verify_lyapunov(wei, pws, 100.0, make_default_s_grid(wei, pws, 100.0));
  CHECK(!ws.passed);
  CHECK(ws.max_ratio == doctest::Approx(1.000151859).epsilon(1e-6));
}

TEST_CASE("drift verifier margins") {
  MG1Pareto mg1;
  TuningParams pt = enforce_termination_params(mg1_se(), mg1);
  VerificationReport d100 =
      verify_drift(mg1, pt, 100.0, make_default_s_grid(mg1, pt, 100.0));
  CHECK(d100.kind == "drift");
  CHECK(d100.passed);
  CHECK(d100.rho == 512.0);
  // Margin on the IS region clears |mu|·delta2 up to quadrature slack.
  CHECK(d100.min_margin_is >= (2.0 / 3.0) * pt.delta2 * 0.9);
  CHECK(d100.min_margin_is == doctest::Approx(1.731030645).epsilon(1e-6));
  CHECK(d100.min_margin == doctest::Approx(0.6743871058).epsilon(1e-6));
  CHECK(d100.min_margin > 0.0);
  CHECK(d100.notes.empty());

  VerificationReport d1k =
      verify_drift(mg1, pt, 1000.0, make_default_s_grid(mg1, pt, 1000.0));
  CHECK(d1k.passed);
  CHECK(d1k.min_margin_is >= (2.0 / 3.0) * pt.delta2 * 0.9);
  CHECK(d1k.min_margin_is == doctest::Approx(0.5777566285).epsilon(1e-6));

  // Weibull: margins pass where g(s) < 1; in the nominal zone h(s) = rho +
  // (b−s)^{1/2} drifts up faster than rho·F̄(b−s) can compensate at this
  // eta_star, so the global margin stays honestly negative and is reported.
  WeibullType wei;
  const TuningParams& pw = wei_se();
  VerificationReport wd =
      verify_drift(wei, pw, 100.0, make_default_s_grid(wei, pw, 100.0));
  CHECK(wd.passed);
  CHECK(wd.min_margin_is > 0.0);
  CHECK(wd.min_margin_is == doctest::Approx(1221775053.0).epsilon(1e-6));
  CHECK(wd.min_margin < 0.0);
  CHECK(wd.rho == 1e12);
  CHECK(!wd.notes.empty());

  // s ≥ b: h ≡ 0, vacuously fine.
  std::vector<double> above{100.0, 102.0};
  VerificationReport dv = verify_drift(mg1, pt, 100.0, above);
  CHECK(dv.checked_points == 0);
  CHECK(dv.passed);
}

TEST_CASE("mode names and cutoff rule round-trips") {
  CHECK(mode_name(Mode::StrongEfficiency) == "strong_efficiency");
  CHECK(mode_name(Mode::TerminationControlled) == "termination_controlled");
  CHECK(mode_name(Mode::GammaMoment) == "gamma_moment");
  CHECK(mode_name(Mode::TotalVariation) == "total_variation");

  CutoffRule f = parse_cutoff_rule("0.9");
  CHECK(f.kind == CutoffRule::Fraction);
  CHECK(f.fraction == 0.9);
  CHECK(cutoff_rule_text(f) == "0.9");
  CHECK(parse_cutoff_rule(" sqrt ").kind == CutoffRule::Sqrt);
  CHECK(parse_cutoff_rule("d-sqrt").kind == CutoffRule::DMinusSqrt);
  CHECK(cutoff_rule_text(parse_cutoff_rule("sqrt")) == "sqrt");
  CHECK(cutoff_rule_text(parse_cutoff_rule("d-sqrt")) == "d-sqrt");
  CHECK_THROWS_AS((void)parse_cutoff_rule("1.5"), std::invalid_argument);
  CHECK_THROWS_AS((void)parse_cutoff_rule("0"), std::invalid_argument);
  CHECK_THROWS_AS((void)parse_cutoff_rule("abc"), std::invalid_argument);
  CHECK_THROWS_AS((void)parse_cutoff_rule("0.9x"), std::invalid_argument);
}
