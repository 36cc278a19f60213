#pragma once

#include <array>

#include "ruinmc/tuning.hpp"

namespace ruinmc {

// Per-state mixture plan.  Component layout (non-nominal, k >= 1):
//   index 0      f_*        on (−∞, c₀]
//   index j<k    f_j        on (c_{j−1}, c_j]
//   index k      f_k        reflected: f(b−s−x) on (c_{k−1}, c_k]
//   index k+1    f_**       on (c_k, ∞)
// Regularly varying tails use k = 0: two components, f_* and f_**, c₀ = c_k.
// Fixed-size storage: plans are rebuilt every step, no heap traffic.
struct MixturePlan {
  static constexpr int kMaxCutoffs = 24;

  double b_minus_s = 0.0;
  bool nominal = true;
  int k = 0;
  int n_comp = 0;  // k + 2 when not nominal
  // Entries beyond the component count are deliberately left unset: a plan is
  // rebuilt on every walk step, so the arrays must not cost a clear each time.
  std::array<double, kMaxCutoffs> c;         // c_0..c_k
  std::array<double, kMaxCutoffs> lsf_c;     // ln F̄(c_j), reused when sampling
  std::array<double, kMaxCutoffs + 1> prob;  // p_*, p_1..p_k, p_**
  std::array<double, kMaxCutoffs + 1> log_prob;
  std::array<double, kMaxCutoffs + 1> log_mass;  // ln of component masses
  double lsf_refl_lo = 0.0;  // ln F̄(b−s−c_k), reflected interval (k >= 1)
  double lsf_refl_hi = 0.0;  // ln F̄(b−s−c_{k−1})
  double a_star_eff = 0.0;   // a_* actually used (recovered when k = 0)

  double p_star() const { return prob[0]; }
  double p_star_star() const { return prob[n_comp - 1]; }
  // Component index covering x (exactly one, by the support partition).
  int component_of(double x) const {
    int j = 0;
    while (j < n_comp - 1 && x > c[j]) ++j;
    return j;
  }
  bool reflected(int comp) const { return k >= 1 && comp == k; }
};

MixturePlan plan_for_state(const IncrementModel& model,
                           const TuningParams& params, double b, double s);

struct Increment {
  double x = 0.0;
  double log_weight = 0.0;  // ln r_s(x) = ln f(x) − ln q_s(x)
};

Increment sample_increment(const MixturePlan& plan, const IncrementModel& model,
                           Rng& rng);

double log_density(const MixturePlan& plan, const IncrementModel& model,
                   double x);
double density(const MixturePlan& plan, const IncrementModel& model, double x);

double weight(const MixturePlan& plan, const IncrementModel& model, double x);

// Bisection form of the k = 0 cutoff equation
// b−s−Λ⁻¹(Λ(b−s)−a_*) = Λ⁻¹(Λ(b−s)−a_**); cross-checks the algebraic
// solution used by plan_for_state.
double solve_a_star_bisect(const IncrementModel& model, double b_minus_s,
                           double a_star_star);

}  // namespace ruinmc
