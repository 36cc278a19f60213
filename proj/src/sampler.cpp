#include "ruinmc/sampler.hpp"

#include <cmath>
#include <sstream>

#include "ruinmc/errors.hpp"

namespace ruinmc {

namespace {

double apply_rule(const CutoffRule& rule, double d) {
  switch (rule.kind) {
    case CutoffRule::Fraction:
      return rule.fraction * d;
    case CutoffRule::Sqrt:
      return std::sqrt(d);
    case CutoffRule::DMinusSqrt:
      return d - std::sqrt(d);
  }
  return kNaN;
}

[[noreturn]] void throw_unordered(const MixturePlan& plan) {
  std::ostringstream os;
  os << "cutoffs not non-decreasing at b-s = " << plan.b_minus_s
     << " (eta_star too small for this recipe):";
  for (int i = 0; i <= plan.k; ++i) os << ' ' << plan.c[i];
  throw cutoff_inconsistency_error(os.str());
}

}  // namespace

MixturePlan plan_for_state(const IncrementModel& model,
                           const TuningParams& params, double b, double s) {
  if (!(s < b)) throw std::invalid_argument("plan_for_state: need s < b");
  MixturePlan plan;
  double d = b - s;
  plan.b_minus_s = d;
  plan.nominal = !(d > params.eta_star);  // g(s) = 1 ⟺ b−s ≤ η_*
  if (plan.nominal) return plan;
  plan.nominal = false;

  const double inf_x = model.support_inf();
  auto lsf = [&](double x) { return x <= inf_x ? 0.0 : model.log_sf(x); };

  double lsf_ck = kNaN;    // ln F̄(c_k) = a_** − Λ(d), exact when c_k is
  if (!params.cutoff_override.empty()) {  // Λ⁻¹-derived (Λ ≡ −ln F̄ here)
    plan.k = static_cast<int>(params.cutoff_override.size()) - 1;
    for (int i = 0; i <= plan.k; ++i)
      plan.c[i] = apply_rule(params.cutoff_override[i], d);
    plan.a_star_eff = kNaN;  // recipe cutoffs are not hazard-increment based
  } else if (model.tail_class() == TailClass::RegularlyVarying) {
    // Regularly varying tail: c₀ = c_k solves both step-I equations at
    // once, since Λ(d) − Λ(d − c_k) = a_* is free to absorb it
    // (cross-checked against solve_a_star_bisect in tests).
    plan.k = 0;
    double lam_d = model.cumulative_hazard(d);
    plan.c[0] = model.inverse_cumulative_hazard(lam_d - params.a_star_star);
    plan.a_star_eff = lam_d - model.cumulative_hazard(d - plan.c[0]);
    lsf_ck = params.a_star_star - lam_d;
  } else {
    plan.k = params.k;
    double lam_d = model.cumulative_hazard(d);
    plan.c[0] =
        d - model.inverse_cumulative_hazard(lam_d - params.a_star);
    for (int j = 1; j < plan.k; ++j) plan.c[j] = params.a_grid[j - 1] * d;
    plan.c[plan.k] =
        model.inverse_cumulative_hazard(lam_d - params.a_star_star);
    plan.a_star_eff = params.a_star;
    lsf_ck = params.a_star_star - lam_d;
  }
  plan.n_comp = plan.k + 2;
  if (plan.n_comp > MixturePlan::kMaxCutoffs)
    throw std::invalid_argument("plan_for_state: too many cutoffs");
  for (int i = 0; i < plan.k; ++i)
    if (!(plan.c[i] <= plan.c[i + 1])) throw_unordered(plan);

  // Component masses, log space.  F̄ at each cutoff is evaluated once and
  // kept in lsf_c so the conditional samplers need not re-evaluate it.
  double lsf_prev = (plan.k == 0 && !std::isnan(lsf_ck)) ? lsf_ck
                                                         : lsf(plan.c[0]);
  if (lsf_prev == 0.0)
    throw cutoff_inconsistency_error("plan_for_state: P(X <= c0) = 0");
  plan.lsf_c[0] = lsf_prev;
  plan.log_mass[0] = log1mexp(lsf_prev);
  for (int j = 1; j < plan.k; ++j) {
    double lsf_j = lsf(plan.c[j]);
    plan.lsf_c[j] = lsf_j;
    plan.log_mass[j] = log_diff_exp(lsf_prev, lsf_j);
    lsf_prev = lsf_j;
  }
  if (plan.k >= 1) {
    plan.lsf_refl_lo = lsf(d - plan.c[plan.k]);
    plan.lsf_refl_hi = lsf(d - plan.c[plan.k - 1]);
    plan.log_mass[plan.k] = log_diff_exp(plan.lsf_refl_lo, plan.lsf_refl_hi);
    plan.log_mass[plan.k + 1] =
        std::isnan(lsf_ck) ? lsf(plan.c[plan.k]) : lsf_ck;
    plan.lsf_c[plan.k] = plan.log_mass[plan.k + 1];
  } else {
    plan.log_mass[1] = lsf_prev;  // F̄(c₀) = F̄(c_k)
  }

  // p_** = min{(1+γ)θ F̄(d)/G(d), ε̃}; p_j = ε̃₁ p_**; p_* the complement.
  // F̄/G through mean_excess_scale: both models specialize it cheaply.
  double pss = std::min(
      (1.0 + params.gamma) * params.theta / model.mean_excess_scale(d),
      params.eps_tilde);
  double pj = params.eps_tilde1 * pss;
  plan.prob[plan.n_comp - 1] = pss;
  for (int j = 1; j <= plan.k; ++j) plan.prob[j] = pj;
  double rest = pss + plan.k * pj;
  if (!(rest < 1.0))
    throw cutoff_inconsistency_error("plan_for_state: p_* not positive");
  plan.prob[0] = 1.0 - rest;
  for (int i = 0; i < plan.n_comp; ++i)
    plan.log_prob[i] = std::log(plan.prob[i]);
  return plan;
}

Increment sample_increment(const MixturePlan& plan, const IncrementModel& model,
                           Rng& rng) {
  if (plan.nominal) return {model.sample_nominal(rng), 0.0};
  double u = rng.uniform();
  int comp = 0;
  double acc = plan.prob[0];
  while (comp < plan.n_comp - 1 && u >= acc) acc += plan.prob[++comp];
  double x;
  if (comp == 0) {
    x = model.sample_conditional_interval(-kInf, plan.c[0], 0.0, plan.lsf_c[0],
                                          plan.log_mass[0], rng);
  } else if (comp == plan.n_comp - 1) {
    x = model.sample_conditional_interval(plan.c[plan.k], kInf,
                                          plan.log_mass[plan.n_comp - 1], -kInf,
                                          plan.log_mass[plan.n_comp - 1], rng);
  } else if (plan.reflected(comp)) {
    double d = plan.b_minus_s;
    double y = model.sample_conditional_interval(
        d - plan.c[plan.k], d - plan.c[plan.k - 1], plan.lsf_refl_lo,
        plan.lsf_refl_hi, plan.log_mass[plan.k], rng);
    x = d - y;
    if (x <= plan.c[plan.k - 1])  // keep x inside the half-open support
      x = std::nextafter(plan.c[plan.k - 1], kInf);
  } else {
    x = model.sample_conditional_interval(plan.c[comp - 1], plan.c[comp],
                                          plan.lsf_c[comp - 1],
                                          plan.lsf_c[comp],
                                          plan.log_mass[comp], rng);
  }
  return {x, weight(plan, model, x)};
}

double log_density(const MixturePlan& plan, const IncrementModel& model,
                   double x) {
  if (plan.nominal) return model.log_density(x);
  int comp = plan.component_of(x);
  double lf = plan.reflected(comp) ? model.log_density(plan.b_minus_s - x)
                                   : model.log_density(x);
  if (lf == -kInf) return -kInf;
  return plan.log_prob[comp] + lf - plan.log_mass[comp];
}

double density(const MixturePlan& plan, const IncrementModel& model, double x) {
  return std::exp(log_density(plan, model, x));
}

double weight(const MixturePlan& plan, const IncrementModel& model, double x) {
  if (x <= model.support_inf())
    throw std::domain_error("weight: f(x) = 0 outside the support");
  if (plan.nominal) return 0.0;
  int comp = plan.component_of(x);
  if (plan.reflected(comp)) {
    return model.log_density(x) - model.log_density(plan.b_minus_s - x) +
           plan.log_mass[comp] - plan.log_prob[comp];
  }
  return plan.log_mass[comp] - plan.log_prob[comp];
}

double solve_a_star_bisect(const IncrementModel& model, double b_minus_s,
                           double a_star_star) {
  double d = b_minus_s;
  double lam_d = model.cumulative_hazard(d);
  double ck = model.inverse_cumulative_hazard(lam_d - a_star_star);
  auto gap = [&](double y) {
    return (d - model.inverse_cumulative_hazard(lam_d - y)) - ck;
  };
  return bisect(gap, 0.0, lam_d * (1.0 - 1e-14), 1e-10);
}

}  // namespace ruinmc
