#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ruinmc/hazard.hpp"
#include "ruinmc/rng.hpp"
#include "ruinmc/tuning.hpp"

namespace ruinmc {

// Hard guard on replication length.  Under Q the walk returns and crosses b
// with probability one, so the cap exists only to bound a pathological run;
// reps that reach it are scored zero and *counted*, never dropped.
inline constexpr std::uint64_t kStepCap = 10'000'000;

struct ReplicationResult {
  bool hit = false;
  bool censored = false;        // step cap reached before crossing
  double log_estimate = -kInf;  // ln Z_b = sum of per-step ln r_s(x); -inf if no hit
  std::uint64_t tau = 0;        // steps to absorption (cap when censored)
  std::vector<double> path;     // S_1..S_tau, recorded only on request
};

struct EstimateSummary {
  std::string estimator;  // "is", "crude", "ak"
  std::uint64_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(n)
  double cv = 0.0;         // per-replication sample sd / mean
  double mean_tau = 0.0;
  std::optional<double> gamma_moment;  // filled for GammaMoment-mode runs
  std::uint64_t seed = 0;
  std::uint64_t censored = 0;
  double wall_seconds = 0.0;
  std::string notes;  // "low-hit" etc.; empty on a clean run
};

// One IS walk from S_0 = 0 until S > b or the step cap.
ReplicationResult run_replication(const IncrementModel& model,
                                  const TuningParams& params, double b,
                                  Rng& rng, bool record_path = false,
                                  std::uint64_t step_cap = kStepCap);

// n replications on streams derived from (seed, index).  `shards` only
// partitions the index range; every field of the summary is invariant to it.
EstimateSummary estimate(const IncrementModel& model,
                         const TuningParams& params, double b, std::uint64_t n,
                         std::uint64_t seed, int shards = 1,
                         std::uint64_t step_cap = kStepCap);

// Smallest barrier B with G(b+B) <= 0.01 G(b): stopping the nominal walk at
// S < -B discards at most ~1% of u(b) worth of late crossings.
double crude_barrier(const IncrementModel& model, double b);

// Nominal walk until S > b (hit) or S < -barrier (declared no-hit).
EstimateSummary crude_mc(const IncrementModel& model, double b,
                         std::uint64_t n, double barrier, std::uint64_t seed,
                         std::uint64_t step_cap = kStepCap);

// Conditional-on-max estimator for the M/G/1 waiting-time tail via the
// Pollaczek–Khinchine geometric sum: u(b) = P(Y_1+..+Y_K > b) with
// K ~ Geom(rho), Y ~ integrated service tail F_I, F̄_I(y) = (1+y)^{1-iota}.
// Each replication returns K·F̄_I(max(M_{K-1}, b−S_{K-1})); tau records K.
EstimateSummary ak_estimate(const MG1Pareto& mg1, double b, std::uint64_t n,
                            std::uint64_t seed);

// mean(Z^{1+gamma}) / mean(Z)^{1+gamma} over log-space replication values.
double gamma_moment_summary(const std::vector<double>& log_z, double gamma);
double gamma_moment_summary(const std::vector<ReplicationResult>& results,
                            double gamma);

}  // namespace ruinmc
