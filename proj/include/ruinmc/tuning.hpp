#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ruinmc/hazard.hpp"

namespace ruinmc {

enum class Mode {
  StrongEfficiency,
  TerminationControlled,
  GammaMoment,
  TotalVariation,
};

std::string mode_name(Mode mode);

// Single-cutoff override recipe: a fraction of b−s, √(b−s), or b−s−√(b−s).
struct CutoffRule {
  enum Kind { Fraction, Sqrt, DMinusSqrt } kind = Fraction;
  double fraction = 0.0;
};

CutoffRule parse_cutoff_rule(const std::string& text);
std::string cutoff_rule_text(const CutoffRule& rule);

struct CutoffGrid {
  double sigma1 = 0.0;
  std::vector<double> a_grid;  // interior ratios a_1..a_{k-1}
  int k = 0;
  double sigma2 = 0.0;
};

struct UserOverrides {
  std::optional<double> delta0;
  std::optional<double> a_star;
  std::optional<double> a_star_star;
  std::optional<double> kappa;     // respected verbatim: no floor, no doubling
  std::optional<double> epsilon;   // TotalVariation target
  std::optional<double> gamma;     // GammaMoment exponent
  std::vector<CutoffRule> cutoffs; // recipe overrides; empty = step-I cutoffs
};

struct TuningParams {
  double a_star = 0.0;
  double a_star_star = 0.0;
  double delta0 = 0.0;  // in (0, 1/4); the internal delta in gamma mode
  double delta1 = 0.0;
  double delta2 = 0.0;  // termination margin, 0 until enforced
  double sigma1 = 0.0;
  std::vector<double> a_grid;
  int k = 0;
  double theta = 0.0;
  double eps_tilde = 0.0;
  double eps_tilde1 = 0.0;
  double kappa = 0.0;
  double eta_star = 0.0;
  double gamma = 1.0;
  Mode mode = Mode::StrongEfficiency;
  double epsilon = 0.0;  // TV target when mode == TotalVariation
  std::vector<CutoffRule> cutoff_override;
};

struct VerificationReport {
  std::string kind;  // "lyapunov" | "drift"
  bool passed = false;
  double max_ratio = 0.0;       // lyapunov: worst E[r^γ g(s+X)]/g(s)
  double min_margin = kInf;     // drift: worst h(s) − E^Q h(s+X)
  double min_margin_is = kInf;  // drift: worst margin over g(s) < 1 points
  double rho = 0.0;             // drift: selected ρ
  double worst_s = kNaN;
  // lyapunov: points with g(s) < 1; drift: points with s < b.
  int checked_points = 0;
  int total_points = 0;
  std::string notes;
};

CutoffGrid build_cutoff_grid(double beta0);

TuningParams select_variance_params(const IncrementModel& model, Mode mode,
                                    const UserOverrides& overrides = {});

TuningParams enforce_termination_params(TuningParams params,
                                        const IncrementModel& model);

TuningParams select_gamma_params(const IncrementModel& model, double gamma,
                                 const UserOverrides& overrides = {});

// Lyapunov function g_γ(s) = min{κ G(b−s)^{1+γ}, 1} in log space.
double log_g(const IncrementModel& model, const TuningParams& params, double b,
             double s);

// 50 states: 10 with g(s)=1 (for drift), 40 log-spaced in the IS region.
std::vector<double> make_default_s_grid(const IncrementModel& model,
                                        const TuningParams& params, double b);

VerificationReport verify_lyapunov(const IncrementModel& model,
                                   const TuningParams& params, double b,
                                   const std::vector<double>& s_grid);

VerificationReport verify_drift(const IncrementModel& model,
                                const TuningParams& params, double b,
                                const std::vector<double>& s_grid);

}  // namespace ruinmc
