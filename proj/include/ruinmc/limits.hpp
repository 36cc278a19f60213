#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ruinmc/engine.hpp"

namespace ruinmc {

// Closed-form limit laws for the conditional path functionals.  ParetoType
// covers the regularly varying family, UnitExponential the concave-hazard
// one; `rate` rescales the argument so the same struct houses Y₁, the
// passage-time limit Y₀/|μ|, and the residual clock N_b/a(b).
struct LimitLaw {
  enum class Kind { ParetoType, UnitExponential };

  Kind kind = Kind::UnitExponential;
  double iota = 0.0;      // ParetoType only: tail index of the increment law
  double exponent = 1.0;  // ParetoType decay power; UnitExponential rate
  double rate = 1.0;      // survival evaluates at rate·t

  // P(Y > t): (1 + rate·t/(ι−1))^{−exponent} or exp(−exponent·rate·t).
  double survival(double t) const;
  double cdf(double t) const { return 1.0 - survival(t); }
};

// Law of the normalized overshoot (S_τ − b)/a(b): Y₁.
LimitLaw overshoot_law(const IncrementModel& model);
// Law of the normalized passage time τ_b/a(b): Y₀/|μ|, with Y₀ =_d Y₁.
LimitLaw passage_law(const IncrementModel& model);
// Law of the normalized decoupling time N_b/a(b) in the coupling below:
// survival t ↦ P(Z_θ > |μ|t).
LimitLaw residual_clock_law(const IncrementModel& model, double theta);

// ln(G(b)/|μ|), the first-order ruin approximation.
double pv_approx(const IncrementModel& model, double b);

// √(second_moment/u² − 1), clamped into [0, 1]; *clamped reports whether a
// clamp fired (noise pushed the moment below u², or the bound was vacuous).
double tv_upper_bound(double second_moment, double u_squared,
                      bool* clamped = nullptr);

// Per-path observables feeding the conditional-law diagnostics.  Collected
// one replication at a time so long walks never accumulate whole paths.
struct PathObservables {
  std::uint64_t tau = 0;
  double s_mid = 0.0;      // S_{⌊τ/2⌋}
  double overshoot = 0.0;  // S_τ − b
  double log_weight = 0.0;
};

// Requires rep.hit and a recorded path.
PathObservables path_observables(const ReplicationResult& rep, double b);

struct CdfRow {
  double x = 0.0;
  double empirical = 0.0;  // self-normalized weighted CDF at x
  double law = 0.0;        // limit-law CDF at x
};

struct KsCheck {
  std::string statistic;
  double ks = 0.0;
  std::vector<CdfRow> cdf;  // thinned table for external plotting
};

struct JointCell {
  double y0 = 0.0, y1 = 0.0;
  double empirical = 0.0;  // weighted P(Y₀ > y₀, Y₁ > y₁)
  double target = 0.0;     // P(Y₁ > y₀ + y₁)
  double boot_se = 0.0;    // bootstrap SE of `empirical`
};

struct DiagnosticsReport {
  double b = 0.0;
  std::uint64_t n_paths = 0;
  double a_scale = 0.0;  // a(b) = G(b)/F̄(b)
  double sigma = 0.0;    // √Var(X), used by the midpoint functional
  KsCheck passage;       // τ/a(b) vs Y₀/|μ|
  KsCheck overshoot;     // (S_τ−b)/a(b) vs Y₁
  KsCheck midpoint;      // (S_{⌊τ/2⌋}−(τ/2)μ)/(σ√τ) vs N(0, 1/2)
  std::vector<JointCell> joint;
  std::string notes;
};

inline constexpr std::uint64_t kMinDiagnosticPaths = 1000;

// Self-normalized weighted comparison of the hit-path functionals against
// their limit laws.  Throws insufficient_sample_error below
// kMinDiagnosticPaths accepted paths.
DiagnosticsReport conditional_diagnostics(
    const std::vector<PathObservables>& observations,
    const IncrementModel& model, double b);
DiagnosticsReport conditional_diagnostics(
    const std::vector<ReplicationResult>& replications,
    const IncrementModel& model, double b);

std::string diagnostics_to_json(const DiagnosticsReport& report);

// One joint draw of (Ŝ, S̃): Ŝ steps through the mixture, S̃ through the
// nominal law, coupled step-by-step via the residual decomposition
// q_s = p(s)f + (1−p(s))q_s*.  n_b is the first decoupled step (kNever if
// the walk crossed while still coupled), tau the crossing step of Ŝ.
struct CouplingResult {
  static constexpr std::uint64_t kNever = ~std::uint64_t{0};

  std::uint64_t n_b = kNever;
  std::uint64_t tau = 0;
  bool equal = false;  // τ_b == N_b
  bool censored = false;
};

CouplingResult coupled_replication(const IncrementModel& model,
                                   const TuningParams& tv_params, double b,
                                   Rng& rng, std::uint64_t step_cap = kStepCap);

// Coupling probability p(s) = p_* / P(X ≤ c₀) in the mixture region, 1
// in the nominal region; the Bernoulli weight of the shared-draw branch.
double coupling_probability(const IncrementModel& model,
                            const TuningParams& params, double b, double s);

}  // namespace ruinmc
