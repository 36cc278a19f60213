#pragma once

#include <functional>
#include <memory>
#include <string>

#include "ruinmc/numeric.hpp"
#include "ruinmc/rng.hpp"

namespace ruinmc {

enum class TailClass { RegularlyVarying, ConcaveHazard };

// A heavy-tailed increment law with its hazard toolkit: density f, right tail
// F̄, cumulative hazard Λ = −ln F̄ and its inverse, integrated tail
// G(x) = ∫ₓ^∞ F̄, plus exact nominal and truncated samplers.  Immutable after
// construction; safe for concurrent use by replication workers.
class IncrementModel {
public:
  virtual ~IncrementModel() = default;

  virtual std::string name() const = 0;
  virtual TailClass tail_class() const = 0;
  // RegularlyVarying: the tail exponent iota (>1).  ConcaveHazard: beta0.
  virtual double tail_index() const = 0;
  virtual double mean_drift() const = 0;  // mu < 0
  virtual double variance() const = 0;    // +inf when the second moment diverges
  virtual double support_inf() const = 0;
  virtual double b0() const = 0;  // hazard regularity threshold

  virtual double log_sf(double x) const = 0;  // ln F̄(x)
  double sf(double x) const { return std::exp(log_sf(x)); }
  virtual double log_density(double x) const = 0;
  double density(double x) const { return std::exp(log_density(x)); }

  virtual double cumulative_hazard(double x) const = 0;
  virtual double inverse_cumulative_hazard(double y) const = 0;

  virtual double integrated_tail(double x) const = 0;
  virtual double log_integrated_tail(double x) const;
  // a(b) = G(b)/F̄(b), evaluated in log space so Weibull-scale b never overflows.
  virtual double mean_excess_scale(double b) const;
  // G^{-1} on (0, G(b0)); used for eta_* = G^{-1}(kappa^{-1/(1+gamma)}).
  virtual double inverse_integrated_tail(double g) const;

  virtual double sample_nominal(Rng& rng) const = 0;
  // Draw X | X in (lo, hi]: rejection when the interval holds most of the
  // mass, else inverse transform on the conditional survival in log space.
  double sample_conditional_interval(double lo, double hi, Rng& rng) const;
  // Hot-path variant: caller supplies ln F̄(lo), ln F̄(hi) and the interval's
  // log mass (already known to a mixture plan), skipping their re-evaluation.
  double sample_conditional_interval(double lo, double hi, double llo,
                                     double lhi, double lmass, Rng& rng) const;

  // ∫_lo^hi phi(x) f(x) dx with a model-appropriate smoothing substitution.
  // abs_tol (optional) accepts pieces that are negligible on a caller-side
  // scale even when their own relative accuracy stalls.
  virtual double integrate_density(double lo, double hi,
                                   const std::function<double(double)>& phi,
                                   double rel_tol, double abs_tol = 0.0)
      const = 0;
};

// X = V − T with P(V > v) = (1+v)^{−iota_V} and T exponential.  The Table-1
// instance is iota_V = 2.5, E T = 4/3 (mu = −2/3); exp_mean is configurable
// because smaller iota_V needs a longer exponential phase to keep mu < 0.
class MG1Pareto final : public IncrementModel {
public:
  explicit MG1Pareto(double pareto_index = 2.5, double exp_mean = 4.0 / 3.0);

  std::string name() const override { return "mg1_pareto"; }
  TailClass tail_class() const override { return TailClass::RegularlyVarying; }
  double tail_index() const override { return iota_; }
  double mean_drift() const override { return mu_; }
  double variance() const override { return var_; }
  double support_inf() const override { return -kInf; }
  double b0() const override { return 0.0; }

  double log_sf(double x) const override;
  double log_density(double x) const override;
  double cumulative_hazard(double x) const override { return -log_sf(x); }
  double inverse_cumulative_hazard(double y) const override;
  double integrated_tail(double x) const override;
  double mean_excess_scale(double b) const override;
  double sample_nominal(Rng& rng) const override;
  double integrate_density(double lo, double hi,
                           const std::function<double(double)>& phi,
                           double rel_tol, double abs_tol = 0.0) const override;

  double pareto_index() const { return iota_; }
  double exp_mean() const { return exp_mean_; }
  // M/G/1 load rho = arrival_rate * E[V]; must be < 1 for the AK baseline.
  double queue_load() const { return (1.0 / exp_mean_) / (iota_ - 1.0); }

private:
  double quad_sf(double x) const;  // direct quadrature of F̄_X, construction only

  double iota_, exp_mean_, rate_;
  double neg_inv_iota_;
  double C_;        // F̄_X(0)
  double log1mC_;   // ln(1 − C) = ln E[e^{−rV}]
  double lam0_;     // Λ(0) = −ln C
  double mu_, var_, G0_;
  double x_spline_max_ = 1e6;
  double A1_, A2_, A3_, A4_;  // asymptotic series for E[(1+T/(1+x))^{−iota}]
  MonotoneCubic spline_;      // ln F̄_X on z = log1p(x), x in [0, x_spline_max_]
};

// P(X > t) = e^{−2√(t+1)} on [−1, ∞): Λ(t) = 2√(t+1), Λ⁻¹(y) = y²/4 − 1,
// G(x) = (√(x+1)+½)e^{−2√(x+1)}, mu = −1/2, beta0 = 1/2.  All closed form.
class WeibullType final : public IncrementModel {
public:
  std::string name() const override { return "weibull_type"; }
  TailClass tail_class() const override { return TailClass::ConcaveHazard; }
  double tail_index() const override { return 0.5; }
  double mean_drift() const override { return -0.5; }
  double variance() const override { return 1.25; }
  double support_inf() const override { return -1.0; }
  double b0() const override { return 0.0; }

  double log_sf(double x) const override {
    return x <= -1.0 ? 0.0 : -2.0 * std::sqrt(x + 1.0);
  }
  double log_density(double x) const override {
    if (x <= -1.0) return -kInf;
    double w = std::sqrt(x + 1.0);
    return -2.0 * w - std::log(w);
  }
  double cumulative_hazard(double x) const override;
  double inverse_cumulative_hazard(double y) const override;
  double integrated_tail(double x) const override;
  double log_integrated_tail(double x) const override;
  double mean_excess_scale(double b) const override {
    return b <= -1.0 ? (-b - 0.5) : std::sqrt(b + 1.0) + 0.5;
  }
  double sample_nominal(Rng& rng) const override {
    double e = rng.exponential();  // X = Λ⁻¹(E)
    return 0.25 * e * e - 1.0;
  }
  double integrate_density(double lo, double hi,
                           const std::function<double(double)>& phi,
                           double rel_tol, double abs_tol = 0.0) const override;
};

std::unique_ptr<IncrementModel> make_mg1_pareto(double pareto_index = 2.5,
                                                double exp_mean = 4.0 / 3.0);
std::unique_ptr<IncrementModel> make_weibull_type();

}  // namespace ruinmc
