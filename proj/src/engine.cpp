#include "ruinmc/engine.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ruinmc/numeric.hpp"
#include "ruinmc/sampler.hpp"

namespace ruinmc {

namespace {

using clock_type = std::chrono::steady_clock;

// Index-order reduction over per-replication values.  Shards only decide who
// fills which slot, so every statistic below is shard-count invariant by
// construction; exponentials are shifted by the running max (Table-2 scale
// sits near e^{-47} and would underflow squared otherwise).
EstimateSummary summarize(std::string estimator,
                          const std::vector<double>& log_z,
                          const std::vector<double>& tau, std::uint64_t seed,
                          std::uint64_t censored) {
  EstimateSummary sum;
  sum.estimator = std::move(estimator);
  sum.n = log_z.size();
  sum.seed = seed;
  sum.censored = censored;

  const double n = static_cast<double>(sum.n);
  double m = -kInf;
  std::uint64_t hits = 0;
  for (double lz : log_z) {
    if (lz > -kInf) {
      ++hits;
      if (lz > m) m = lz;
    }
  }
  double s1 = 0.0, s2 = 0.0, st = 0.0;
  for (double lz : log_z) {
    if (lz > -kInf) {
      double e = std::exp(lz - m);
      s1 += e;
      s2 += e * e;
    }
  }
  for (double t : tau) st += t;
  sum.mean_tau = st / n;

  if (hits > 0) {
    double scale = std::exp(m);
    sum.mean = scale * (s1 / n);
    if (sum.n > 1) {
      double varn = std::max(0.0, s2 - s1 * s1 / n);  // sum of squared devs / e^{2m}
      double sd = scale * std::sqrt(varn / (n - 1.0));
      sum.std_error = sd / std::sqrt(n);
      sum.cv = sd / sum.mean;
    }
  }
  if (hits < 10) {
    sum.notes = "low-hit (" + std::to_string(hits) + " hits)";
  }
  if (censored > 0) {
    if (!sum.notes.empty()) sum.notes += "; ";
    sum.notes += "censored=" + std::to_string(censored);
  }
  return sum;
}

}  // namespace

ReplicationResult run_replication(const IncrementModel& model,
                                  const TuningParams& params, double b,
                                  Rng& rng, bool record_path,
                                  std::uint64_t step_cap) {
  if (!(b > 0.0)) throw std::invalid_argument("run_replication: need b > 0");
  ReplicationResult res;
  double s = 0.0, log_l = 0.0;
  for (std::uint64_t step = 1; step <= step_cap; ++step) {
    MixturePlan plan = plan_for_state(model, params, b, s);
    Increment inc = sample_increment(plan, model, rng);
    s += inc.x;
    log_l += inc.log_weight;
    if (record_path) res.path.push_back(s);
    if (s > b) {
      res.hit = true;
      res.tau = step;
      res.log_estimate = log_l;
      return res;
    }
  }
  res.censored = true;
  res.tau = step_cap;
  return res;
}

EstimateSummary estimate(const IncrementModel& model,
                         const TuningParams& params, double b, std::uint64_t n,
                         std::uint64_t seed, int shards,
                         std::uint64_t step_cap) {
  if (n < 2) throw std::invalid_argument("estimate: need n >= 2");
  if (shards < 1) throw std::invalid_argument("estimate: need shards >= 1");
  auto t0 = clock_type::now();

  std::vector<double> log_z(n), tau(n);
  std::uint64_t censored = 0;
  for (int sh = 0; sh < shards; ++sh) {
    for (std::uint64_t i = static_cast<std::uint64_t>(sh); i < n;
         i += static_cast<std::uint64_t>(shards)) {
      Rng rng(stream_seed(seed, i));
      ReplicationResult r =
          run_replication(model, params, b, rng, false, step_cap);
      log_z[i] = r.log_estimate;
      tau[i] = static_cast<double>(r.tau);
      if (r.censored) ++censored;
    }
  }
  EstimateSummary sum = summarize("is", log_z, tau, seed, censored);
  if (params.mode == Mode::GammaMoment)
    sum.gamma_moment = gamma_moment_summary(log_z, params.gamma);
  sum.wall_seconds =
      std::chrono::duration<double>(clock_type::now() - t0).count();
  return sum;
}

double crude_barrier(const IncrementModel& model, double b) {
  double target = 0.01 * model.integrated_tail(b);
  return model.inverse_integrated_tail(target) - b;
}

EstimateSummary crude_mc(const IncrementModel& model, double b,
                         std::uint64_t n, double barrier, std::uint64_t seed,
                         std::uint64_t step_cap) {
  if (!(b > 0.0)) throw std::invalid_argument("crude_mc: need b > 0");
  if (!(barrier > 0.0) ||
      model.log_integrated_tail(b + barrier) >
          std::log(0.01) + model.log_integrated_tail(b) + 1e-9)
    throw std::invalid_argument(
        "crude_mc: barrier too small; need G(b+B) <= 0.01 G(b)");
  auto t0 = clock_type::now();

  std::vector<double> log_z(n), tau(n);
  std::uint64_t censored = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    Rng rng(stream_seed(seed, i));
    double s = 0.0;
    double lz = -kInf;
    std::uint64_t t = step_cap;
    for (std::uint64_t step = 1; step <= step_cap; ++step) {
      s += model.sample_nominal(rng);
      if (s > b) {
        lz = 0.0;
        t = step;
        break;
      }
      if (s < -barrier) {
        t = step;
        break;
      }
    }
    if (t == step_cap && !(s > b) && !(s < -barrier)) ++censored;
    log_z[i] = lz;
    tau[i] = static_cast<double>(t);
  }
  EstimateSummary sum = summarize("crude", log_z, tau, seed, censored);
  sum.wall_seconds =
      std::chrono::duration<double>(clock_type::now() - t0).count();
  return sum;
}

EstimateSummary ak_estimate(const MG1Pareto& mg1, double b, std::uint64_t n,
                            std::uint64_t seed) {
  if (!(b > 0.0)) throw std::invalid_argument("ak_estimate: need b > 0");
  auto t0 = clock_type::now();
  const double rho = mg1.queue_load();
  const double log_rho = std::log(rho);
  const double alpha = mg1.pareto_index() - 1.0;  // F̄_I(y) = (1+y)^{-alpha}

  std::vector<double> log_z(n), tau(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Rng rng(stream_seed(seed, i));
    // P(K >= k) = rho^k, k = 0, 1, ...
    auto k = static_cast<std::uint64_t>(
        std::floor(std::log(rng.uniform_pos()) / log_rho));
    if (k == 0) {
      log_z[i] = -kInf;
      tau[i] = 0.0;
      continue;
    }
    double sum_y = 0.0, max_y = 0.0;
    for (std::uint64_t j = 1; j < k; ++j) {
      double y = std::pow(rng.uniform_pos(), -1.0 / alpha) - 1.0;
      sum_y += y;
      if (y > max_y) max_y = y;
    }
    double arg = std::max(max_y, b - sum_y);
    log_z[i] = std::log(static_cast<double>(k)) - alpha * std::log1p(arg);
    tau[i] = static_cast<double>(k);
  }
  EstimateSummary sum = summarize("ak", log_z, tau, seed, 0);
  sum.wall_seconds =
      std::chrono::duration<double>(clock_type::now() - t0).count();
  return sum;
}

double gamma_moment_summary(const std::vector<double>& log_z, double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("gamma_moment_summary: need gamma > 0");
  double m = -kInf;
  for (double lz : log_z)
    if (lz > m) m = lz;
  if (m == -kInf) return kNaN;  // no hits: ratio undefined
  double a = 0.0, s = 0.0;
  for (double lz : log_z) {
    if (lz > -kInf) {
      a += std::exp((1.0 + gamma) * (lz - m));
      s += std::exp(lz - m);
    }
  }
  double n = static_cast<double>(log_z.size());
  // e^m cancels: mean(Z^{1+g})/mean(Z)^{1+g} = (a/n)/(s/n)^{1+g}
  return (a / n) / std::pow(s / n, 1.0 + gamma);
}

double gamma_moment_summary(const std::vector<ReplicationResult>& results,
                            double gamma) {
  std::vector<double> log_z;
  log_z.reserve(results.size());
  for (const ReplicationResult& r : results) log_z.push_back(r.log_estimate);
  return gamma_moment_summary(log_z, gamma);
}

}  // namespace ruinmc
