#include "ruinmc/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ruinmc/errors.hpp"
#include "ruinmc/quadrature.hpp"
#include "ruinmc/sampler.hpp"

namespace ruinmc {

// Tuning is organized as numbered steps, shared vocabulary with sampler.cpp:
//   I    per-state cutoffs c_0 < ... < c_k (sampler.cpp),
//   II   component masses and mixture probabilities (sampler.cpp),
//   III  the delta1 second-moment slack,
//   IV   theta, eps_tilde, eps_tilde1 and the kappa floor,
//   V    the delta2 termination margin (termination and gamma modes only).

namespace {

constexpr double kEtaFloorMult = 10.0;  // eta_star >= 10|mu|
constexpr double kRhoMax = 1e12;
constexpr double kKappaMax = 1e290;  // keep kappa^{-1/(1+gamma)} normal
constexpr int kMaxHalvings = 60;

// theta, eps_tilde, eps_tilde1, delta1 from (delta0, mu, k): step IV plus the
// step-III delta1 bound taken at half its supremum.
void derive_se_constants(TuningParams& p, double mu) {
  double d0 = p.delta0;
  double pow5 = std::pow(1.0 + d0, 5);
  double kp1 = static_cast<double>(p.k + 1);
  p.theta = -mu * (1.0 - d0) / pow5;
  p.eps_tilde = d0 * d0;
  p.eps_tilde1 = d0 / kp1;
  p.delta1 =
      0.5 * d0 * mu * mu * (1.0 - d0) * (1.0 - d0) / (pow5 * pow5 * kp1 * kp1);
}

double kappa_floor(const TuningParams& p) {
  return std::exp(2.0 * p.a_star_star) / (4.0 * p.theta * p.theta * p.delta0);
}

void set_eta_star(TuningParams& p, const IncrementModel& model) {
  p.eta_star = model.inverse_integrated_tail(
      std::pow(p.kappa, -1.0 / (1.0 + p.gamma)));
}

VerificationReport verify_lyapunov_impl(const IncrementModel& model,
                                        const TuningParams& params, double b,
                                        const std::vector<double>& s_grid,
                                        bool fail_fast);

bool lyapunov_probe(const IncrementModel& model, const TuningParams& p) {
  for (double b : {1e2, 1e3}) {
    VerificationReport rep = verify_lyapunov_impl(
        model, p, b, make_default_s_grid(model, p, b), true);
    if (!rep.passed) return false;
  }
  return true;
}

// kappa: user value verbatim, else the step-IV floor doubled until eta_star
// clears its floor and the Lyapunov verifier accepts at b = 1e2, 1e3.
void finalize_kappa(TuningParams& p, const IncrementModel& model,
                    const std::optional<double>& user_kappa) {
  if (user_kappa) {
    p.kappa = *user_kappa;
    set_eta_star(p, model);
    return;
  }
  double g_cap =
      model.integrated_tail(std::max(model.b0(), model.support_inf()));
  p.kappa = kappa_floor(p);
  while (std::pow(p.kappa, -1.0 / (1.0 + p.gamma)) >= 0.999 * g_cap)
    p.kappa *= 2.0;  // keep kappa^{-1/(1+gamma)} inside G's range
  set_eta_star(p, model);
  double eta_floor = kEtaFloorMult * std::abs(model.mean_drift());
  while (p.eta_star < eta_floor) {
    p.kappa *= 2.0;
    set_eta_star(p, model);
  }
  while (p.kappa < kKappaMax) {
    if (lyapunov_probe(model, p)) return;
    p.kappa *= 2.0;
    set_eta_star(p, model);
  }
  // Unverifiable within double range (e.g. very light concave tails in
  // modes with tiny p_j): keep the last kappa; verify_lyapunov still
  // reports the failure downstream, selection itself stays constructive.
}

double termination_delta2(double iota, double d0, double ass) {
  return 2.0 * (iota - 1.0) * (1.0 - d0) * (1.0 - d0) /
             std::pow(1.0 + d0, 5) * std::exp(-ass) -
         1.0 - 2.0 * (1.0 - std::exp(-2.0 * ass / iota)) * (iota - 1.0);
}

// Step V: halve a_** and delta0 together until delta2 > 0; impossible (and
// diagnosed) when iota <= 1.5, where the limit 2(iota-1)-1 is nonpositive.
void apply_termination_halvings(TuningParams& p, const IncrementModel& model,
                                bool* changed = nullptr) {
  double iota = model.tail_index();
  for (int h = 0; h <= kMaxHalvings; ++h) {
    double d2 = termination_delta2(iota, p.delta0, p.a_star_star);
    if (d2 > 0.0) {
      p.delta2 = d2;
      derive_se_constants(p, model.mean_drift());
      if (changed) *changed = h > 0;
      return;
    }
    p.delta0 *= 0.5;
    p.a_star_star *= 0.5;
  }
  throw std::runtime_error(
      "enforce_termination_params: delta2 not positive after 60 halvings "
      "(requires tail index > 1.5)");
}

// e^log_pref·\int_lo^d (d-x)^p f(x) dx; u = (d-x)^p flattens the kink at d.
// The prefactor stays in log form: p_**/F̄(c_k) alone can overflow a double
// at large b−s, while paired with the density it is harmless.
double power_tail_integral(const IncrementModel& model, double lo, double d,
                           double p, double log_pref, double abs_tol) {
  double q = 1.0 / p;
  double umax = std::pow(d - lo, p);
  return integrate_gk(
      [&](double u) {
        double x = d - std::pow(u, q);
        return q * std::pow(u, q) * std::exp(model.log_density(x) + log_pref);
      },
      0.0, umax, 1e-9, "verify_drift boundary piece", abs_tol);
}

}  // namespace

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::StrongEfficiency:
      return "strong_efficiency";
    case Mode::TerminationControlled:
      return "termination_controlled";
    case Mode::GammaMoment:
      return "gamma_moment";
    case Mode::TotalVariation:
      return "total_variation";
  }
  return "unknown";
}

CutoffRule parse_cutoff_rule(const std::string& text) {
  auto first = text.find_first_not_of(" \t");
  auto last = text.find_last_not_of(" \t");
  std::string body =
      first == std::string::npos ? "" : text.substr(first, last - first + 1);
  CutoffRule rule;
  if (body == "sqrt") {
    rule.kind = CutoffRule::Sqrt;
    return rule;
  }
  if (body == "d-sqrt") {
    rule.kind = CutoffRule::DMinusSqrt;
    return rule;
  }
  size_t used = 0;
  double frac = 0.0;
  try {
    frac = std::stod(body, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != body.size() || !(frac > 0.0 && frac < 1.0))
    throw std::invalid_argument(
        "cutoff rule must be a fraction in (0,1), \"sqrt\", or \"d-sqrt\": "
        "got \"" +
        text + "\"");
  rule.kind = CutoffRule::Fraction;
  rule.fraction = frac;
  return rule;
}

std::string cutoff_rule_text(const CutoffRule& rule) {
  switch (rule.kind) {
    case CutoffRule::Sqrt:
      return "sqrt";
    case CutoffRule::DMinusSqrt:
      return "d-sqrt";
    case CutoffRule::Fraction:
      break;
  }
  std::ostringstream os;
  os << rule.fraction;
  return os.str();
}

CutoffGrid build_cutoff_grid(double beta0) {
  if (!(beta0 > 0.0 && beta0 < 1.0))
    throw std::invalid_argument("build_cutoff_grid: need beta0 in (0,1)");
  constexpr int kGridPts = 10000;
  double sigma1 = 0.0;
  for (int step = 10; step >= 1; --step) {
    double cand = 0.05 * static_cast<double>(step);
    bool ok = true;
    for (int i = 0; i < kGridPts && ok; ++i) {
      double x = cand * static_cast<double>(i) / (kGridPts - 1);
      ok = 2.0 - 2.0 * std::pow(1.0 - x, beta0) - std::pow(x, beta0) <= 0.0;
    }
    if (ok) {
      sigma1 = cand;
      break;
    }
  }
  if (sigma1 == 0.0)
    throw std::runtime_error(
        "build_cutoff_grid: no sigma1 in {0.5,...,0.05} satisfies the "
        "concavity inequality (beta0 too close to 1)");
  CutoffGrid grid;
  grid.sigma1 = sigma1;
  double half = 0.5 * sigma1;
  for (double a = half; a <= 1.0 - half + 1e-12; a += half)
    grid.a_grid.push_back(a);
  // The a_j index the interior plain components only; c_0 and c_k come from
  // hazard increments, so the component count is |a_grid| + 1.
  grid.k = static_cast<int>(grid.a_grid.size()) + 1;
  double worst = kInf;
  for (size_t j = 0; j + 1 < grid.a_grid.size(); ++j)
    worst = std::min(worst, std::pow(grid.a_grid[j], beta0) +
                                std::pow(1.0 - grid.a_grid[j + 1], beta0));
  grid.sigma2 = worst - 1.0;
  if (!(grid.sigma2 > 0.0))
    throw std::runtime_error("build_cutoff_grid: sigma2 <= 0");
  return grid;
}

TuningParams select_variance_params(const IncrementModel& model, Mode mode,
                                    const UserOverrides& overrides) {
  if (mode == Mode::GammaMoment) {
    if (!overrides.gamma)
      throw std::invalid_argument("GammaMoment mode requires gamma");
    return select_gamma_params(model, *overrides.gamma, overrides);
  }
  double mu = model.mean_drift();
  if (!(mu < 0.0))
    throw std::invalid_argument("select_variance_params: need drift < 0");
  TuningParams p;
  p.mode = mode;
  p.delta0 = overrides.delta0.value_or(0.1);
  p.a_star = overrides.a_star.value_or(0.1);
  p.a_star_star = overrides.a_star_star.value_or(0.1);
  p.cutoff_override = overrides.cutoffs;
  if (model.tail_class() == TailClass::ConcaveHazard) {
    CutoffGrid grid = build_cutoff_grid(model.tail_index());
    p.sigma1 = grid.sigma1;
    p.a_grid = grid.a_grid;
    p.k = grid.k;
  }
  if (!p.cutoff_override.empty())
    p.k = static_cast<int>(p.cutoff_override.size()) - 1;
  derive_se_constants(p, mu);
  if (mode == Mode::TotalVariation) {
    if (!overrides.epsilon)
      throw std::invalid_argument("TotalVariation mode requires epsilon");
    double eps = *overrides.epsilon;
    if (!(eps > 0.0 && eps < 1.0))
      throw std::invalid_argument("TotalVariation: need epsilon in (0,1)");
    p.epsilon = eps;
    p.theta = -mu * (1.0 - eps) / 2.0;
    p.eps_tilde = eps;
    p.eps_tilde1 = eps * eps;
  }
  if (mode == Mode::TerminationControlled &&
      model.tail_class() == TailClass::RegularlyVarying)
    apply_termination_halvings(p, model);
  finalize_kappa(p, model, overrides.kappa);
  return p;
}

TuningParams enforce_termination_params(TuningParams params,
                                        const IncrementModel& model) {
  if (model.tail_class() != TailClass::RegularlyVarying)
    throw std::invalid_argument(
        "enforce_termination_params: regularly varying models only");
  params.mode = Mode::TerminationControlled;
  bool changed = false;
  apply_termination_halvings(params, model, &changed);
  if (changed || !(params.kappa > 0.0))
    finalize_kappa(params, model, std::nullopt);
  return params;
}

TuningParams select_gamma_params(const IncrementModel& model, double gamma,
                                 const UserOverrides& overrides) {
  if (model.tail_class() != TailClass::RegularlyVarying)
    throw std::invalid_argument(
        "select_gamma_params: regularly varying models only");
  double iota = model.tail_index();
  if (!(iota > 1.0 && iota <= 1.5))
    throw std::invalid_argument("select_gamma_params: need iota in (1, 1.5]");
  double bound = (iota - 1.0) / (2.0 - iota);
  if (!(gamma > 0.0 && gamma < bound)) {
    std::ostringstream os;
    os << "select_gamma_params: gamma must lie in (0, " << bound
       << ") for iota = " << iota;
    throw std::invalid_argument(os.str());
  }
  double mu = model.mean_drift();
  if (!(mu < 0.0))
    throw std::invalid_argument("select_gamma_params: need drift < 0");
  TuningParams p;
  p.mode = Mode::GammaMoment;
  p.gamma = gamma;
  p.a_star = overrides.a_star.value_or(0.1);
  p.cutoff_override = overrides.cutoffs;
  p.k = p.cutoff_override.empty()
            ? 0
            : static_cast<int>(p.cutoff_override.size()) - 1;
  double delta = overrides.delta0.value_or(0.1);
  for (int h = 0;; ++h) {
    double ass = overrides.a_star_star.value_or(0.5 * delta);  // a_** < delta
    double d2 = (1.0 + gamma) * (iota - 1.0) * std::pow(1.0 - delta, 3) *
                    std::exp(-ass) / (gamma * (1.0 + delta)) -
                1.0 -
                (1.0 + gamma) * (1.0 - std::exp(-2.0 * ass / iota)) *
                    (iota - 1.0);
    if (d2 > 0.0) {
      p.delta0 = delta;
      p.a_star_star = ass;
      p.delta2 = d2;
      break;
    }
    if (h >= kMaxHalvings)
      throw std::runtime_error(
          "select_gamma_params: delta2 not positive after 60 halvings");
    delta *= 0.5;
  }
  double d0 = p.delta0;
  p.theta = -mu * (1.0 - d0) * (1.0 - d0) / (gamma * (1.0 + d0));
  p.eps_tilde = d0 * d0;
  p.eps_tilde1 = d0 / static_cast<double>(p.k + 1);
  double kp1 = static_cast<double>(p.k + 1);
  p.delta1 = 0.5 * d0 * mu * mu * (1.0 - d0) * (1.0 - d0) /
             (std::pow(1.0 + d0, 10) * kp1 * kp1);
  finalize_kappa(p, model, overrides.kappa);
  return p;
}

double log_g(const IncrementModel& model, const TuningParams& params, double b,
             double s) {
  double lg = std::log(params.kappa) +
              (1.0 + params.gamma) * model.log_integrated_tail(b - s);
  return std::min(lg, 0.0);
}

std::vector<double> make_default_s_grid(const IncrementModel& model,
                                        const TuningParams& params, double b) {
  (void)model;
  double eta = params.eta_star;
  std::vector<double> grid;
  grid.reserve(50);
  for (int i = 1; i <= 10; ++i)  // near-boundary zone, g(s) = 1
    grid.push_back(b - eta * static_cast<double>(i) / 10.0);
  double d_max = std::max(4.0 * b, 10.0 * eta);
  double step = std::log(d_max / eta) / 40.0;
  for (int j = 1; j <= 40; ++j)  // IS zone, log-spaced in b−s
    grid.push_back(b - eta * std::exp(step * static_cast<double>(j)));
  return grid;
}

namespace {

// fail_fast aborts on the first failing point; the default grid visits the
// smallest b−s beyond eta_star first, which is where violations concentrate,
// so a failing probe costs about one point instead of the whole grid.
VerificationReport verify_lyapunov_impl(const IncrementModel& model,
                                        const TuningParams& params, double b,
                                        const std::vector<double>& s_grid,
                                        bool fail_fast) {
  VerificationReport rep;
  rep.kind = "lyapunov";
  rep.total_points = static_cast<int>(s_grid.size());
  bool quad_ok = true;
  const double inf_x = model.support_inf();
  for (double s : s_grid) {
    if (!(s < b)) continue;
    double lg = log_g(model, params, b, s);
    if (lg >= 0.0) continue;  // g(s) = 1: r ≡ 1 and g ≤ 1, trivially fine
    ++rep.checked_points;
    MixturePlan plan = plan_for_state(model, params, b, s);
    double d = plan.b_minus_s;
    auto integrand = [&](double x) {
      if (x <= inf_x) return 0.0;
      double lw = weight(plan, model, x);
      return std::exp(params.gamma * lw + log_g(model, params, b, s + x) - lg);
    };
    // Split at density kinks (cutoffs) and at the g(s+x) = 1 boundary.
    std::vector<double> cuts;
    if (!plan.nominal)
      for (int i = 0; i <= plan.k; ++i) cuts.push_back(plan.c[i]);
    cuts.push_back(d - params.eta_star);
    std::sort(cuts.begin(), cuts.end());
    // Piece values are fractions of a ratio of order 1, so a 1e-12 absolute
    // floor rescues negligible pieces without touching the 1e-6 pass band.
    double ratio = 0.0;
    try {
      double lo = -kInf;
      for (double cut : cuts) {
        if (cut <= inf_x || !(cut > lo)) continue;
        ratio += model.integrate_density(lo, cut, integrand, 1e-9, 1e-12);
        lo = cut;
      }
      ratio += model.integrate_density(lo, kInf, integrand, 1e-9, 1e-12);
    } catch (const quadrature_error& e) {
      quad_ok = false;
      std::ostringstream os;
      os << "quadrature failure at s = " << s << ": " << e.what() << "\n";
      rep.notes += os.str();
      if (fail_fast) break;
      continue;
    }
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.worst_s = s;
    }
    if (fail_fast && rep.max_ratio > 1.0 + kTolLyap) break;
  }
  rep.passed = quad_ok && rep.max_ratio <= 1.0 + kTolLyap;
  return rep;
}

}  // namespace

VerificationReport verify_lyapunov(const IncrementModel& model,
                                   const TuningParams& params, double b,
                                   const std::vector<double>& s_grid) {
  return verify_lyapunov_impl(model, params, b, s_grid, false);
}

VerificationReport verify_drift(const IncrementModel& model,
                                const TuningParams& params, double b,
                                const std::vector<double>& s_grid) {
  VerificationReport rep;
  rep.kind = "drift";
  rep.total_points = static_cast<int>(s_grid.size());
  bool quad_ok = true;
  const bool rv = model.tail_class() == TailClass::RegularlyVarying;
  const double pw = rv ? 1.0 : 1.0 - model.tail_index();  // h = rho + d^pw
  // E^Q[h(s+X)] = rho·A + B with A = Q(X < d), B = E^Q[(d−X)^pw; X < d]:
  // both rho-free, so one quadrature pass per point serves every rho.
  struct Point {
    double s, h0, a, bint;
    bool is;  // g(s) < 1
  };
  std::vector<Point> pts;
  for (double s : s_grid) {
    if (!(s < b)) continue;  // h ≡ 0 there: vacuous
    ++rep.checked_points;
    double d = b - s;
    MixturePlan plan = plan_for_state(model, params, b, s);
    // Component prefactors (prob/mass) are folded into the integrand so the
    // absolute floor below acts on contributions to B, whose scale is d^pw.
    double abs_tol = 1e-10 * (1.0 + std::pow(d, pw));
    double a = 0.0, bint = 0.0;
    try {
      if (plan.nominal) {
        auto phi = [&](double x) { return std::pow(d - x, pw); };
        a = 1.0 - model.sf(d);
        bint = model.integrate_density(-kInf, d - 1.0, phi, 1e-9, abs_tol) +
               power_tail_integral(model, d - 1.0, d, pw, 0.0, abs_tol);
      } else {
        int last = plan.n_comp - 1;
        a = 1.0 - plan.prob[last] *
                      std::exp(model.log_sf(d) - plan.log_mass[last]);
        auto piece = [&](int comp, double lo, double hi) {
          double pref = plan.prob[comp] / std::exp(plan.log_mass[comp]);
          return model.integrate_density(
              lo, hi, [&](double x) { return pref * std::pow(d - x, pw); },
              1e-9, abs_tol);
        };
        bint = piece(0, -kInf, plan.c[0]);
        for (int j = 1; j < plan.k; ++j)
          bint += piece(j, plan.c[j - 1], plan.c[j]);
        if (plan.k >= 1) {
          // Reflected piece via y = d − x: density f(y), payoff y^pw.
          double pref = plan.prob[plan.k] / std::exp(plan.log_mass[plan.k]);
          bint += model.integrate_density(
              d - plan.c[plan.k], d - plan.c[plan.k - 1],
              [&](double y) { return pref * std::pow(y, pw); }, 1e-9, abs_tol);
        }
        bint += power_tail_integral(model, plan.c[plan.k], d, pw,
                                    plan.log_prob[last] - plan.log_mass[last],
                                    abs_tol);
      }
    } catch (const quadrature_error& e) {
      quad_ok = false;
      std::ostringstream os;
      os << "quadrature failure at s = " << s << ": " << e.what() << "\n";
      rep.notes += os.str();
      continue;
    }
    pts.push_back({s, std::pow(d, pw), a, bint,
                   log_g(model, params, b, s) < 0.0});
  }
  // Margin(rho) = rho(1−A) + h0 − B grows with rho (A < 1 strictly); double
  // rho until even the near-boundary points clear zero.
  double rho = 1.0;
  bool found = true;
  auto min_margin = [&](double r) {
    double m = kInf;
    for (const Point& pt : pts)
      m = std::min(m, r * (1.0 - pt.a) + pt.h0 - pt.bint);
    return m;
  };
  while (!(min_margin(rho) > 0.0)) {
    rho *= 2.0;
    if (rho > kRhoMax) {
      rho = kRhoMax;
      found = false;
      break;
    }
  }
  rep.rho = rho;
  if (!found) {
    double worst_req = -kInf;
    for (const Point& pt : pts) {
      double req = (pt.bint - pt.h0) / (1.0 - pt.a);
      if (req > worst_req) {
        worst_req = req;
        rep.worst_s = pt.s;
      }
    }
    std::ostringstream os;
    os << "no rho <= " << kRhoMax << " yields a positive margin (worst s = "
       << rep.worst_s << ", required rho = " << worst_req << ")\n";
    rep.notes += os.str();
  }
  for (const Point& pt : pts) {
    double margin = rho * (1.0 - pt.a) + pt.h0 - pt.bint;
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      if (found) rep.worst_s = pt.s;
    }
    if (pt.is) rep.min_margin_is = std::min(rep.min_margin_is, margin);
  }
  // Pass on the g(s) < 1 region, where the termination propositions actually
  // bite; the nominal-region margin (reported above) can be irreparably
  // negative when eta_star is huge, since there h drifts up by O(d^{pw-1})
  // while rho's leverage is only rho·F̄(d).
  rep.passed = quad_ok && rep.min_margin_is > 0.0;
  return rep;
}

}  // namespace ruinmc
