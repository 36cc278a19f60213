#include "ruinmc/limits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"
#include "ruinmc/errors.hpp"
#include "ruinmc/sampler.hpp"

namespace ruinmc {

double LimitLaw::survival(double t) const {
  if (t <= 0.0) return 1.0;
  double u = rate * t;
  if (kind == Kind::UnitExponential) return std::exp(-exponent * u);
  return std::exp(-exponent * std::log1p(u / (iota - 1.0)));
}

LimitLaw overshoot_law(const IncrementModel& model) {
  if (model.tail_class() == TailClass::RegularlyVarying) {
    double iota = model.tail_index();
    return {LimitLaw::Kind::ParetoType, iota, iota - 1.0, 1.0};
  }
  return {LimitLaw::Kind::UnitExponential, 0.0, 1.0, 1.0};
}

LimitLaw passage_law(const IncrementModel& model) {
  // τ/a(b) ⇒ Y₀/|μ| with Y₀ =_d Y₁, so the survival is that of Y₁ at |μ|t.
  LimitLaw law = overshoot_law(model);
  law.rate = -model.mean_drift();
  return law;
}

LimitLaw residual_clock_law(const IncrementModel& model, double theta) {
  double abs_mu = -model.mean_drift();
  if (theta <= 0.0) throw std::invalid_argument("residual_clock_law: theta");
  if (model.tail_class() == TailClass::RegularlyVarying) {
    double iota = model.tail_index();
    return {LimitLaw::Kind::ParetoType, iota,
            2.0 * theta * (iota - 1.0) / abs_mu, abs_mu};
  }
  return {LimitLaw::Kind::UnitExponential, 0.0, 2.0 * theta / abs_mu, abs_mu};
}

double pv_approx(const IncrementModel& model, double b) {
  return model.log_integrated_tail(b) - std::log(-model.mean_drift());
}

double tv_upper_bound(double second_moment, double u_squared, bool* clamped) {
  if (clamped) *clamped = false;
  if (!(second_moment >= 0.0) || !(u_squared > 0.0))
    throw std::invalid_argument("tv_upper_bound: moments must be positive");
  double excess = second_moment / u_squared - 1.0;
  if (excess < 0.0) {
    if (clamped) *clamped = true;
    return 0.0;
  }
  double bound = std::sqrt(excess);
  if (bound > 1.0) {
    if (clamped) *clamped = true;
    return 1.0;  // a TV distance never exceeds one; larger bounds are vacuous
  }
  return bound;
}

PathObservables path_observables(const ReplicationResult& rep, double b) {
  if (!rep.hit || rep.path.empty())
    throw std::invalid_argument(
        "path_observables: needs a hit replication with a recorded path");
  PathObservables o;
  o.tau = rep.tau;
  std::uint64_t mid = rep.tau / 2;
  o.s_mid = mid == 0 ? 0.0 : rep.path[mid - 1];  // path[i] = S_{i+1}, S_0 = 0
  o.overshoot = rep.path.back() - b;
  o.log_weight = rep.log_estimate;
  return o;
}

namespace {

struct Atom {
  double x = 0.0;
  double w = 0.0;  // normalized weight
};

// KS distance of a weighted empirical law against a continuous CDF; the sup
// is attained just before or just after one of the atoms.  Fills a thinned
// CDF table as a side product.
template <class Cdf>
double weighted_ks(std::vector<Atom> atoms, Cdf cdf, std::vector<CdfRow>* out) {
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.x < b.x; });
  std::vector<CdfRow> rows;
  rows.reserve(atoms.size());
  double cum = 0.0, ks = 0.0;
  for (size_t i = 0; i < atoms.size();) {
    size_t j = i;
    double w = 0.0;
    while (j < atoms.size() && atoms[j].x == atoms[i].x) w += atoms[j++].w;
    double law = cdf(atoms[i].x);
    ks = std::max({ks, std::abs(cum - law), std::abs(cum + w - law)});
    cum += w;
    rows.push_back({atoms[i].x, cum, law});
    i = j;
  }
  if (out) {
    constexpr size_t kTableRows = 128;
    size_t stride = std::max<size_t>(1, rows.size() / kTableRows);
    for (size_t i = 0; i < rows.size(); i += stride) out->push_back(rows[i]);
    if (!rows.empty() && (rows.size() - 1) % stride != 0)
      out->push_back(rows.back());
  }
  return ks;
}

double coupling_probability_of(const MixturePlan& plan) {
  if (plan.nominal) return 1.0;
  double p = std::exp(plan.log_prob[0] - plan.log_mass[0]);
  if (p > 1.0 + 1e-9)
    throw residual_negativity_error(
        "coupling probability exceeds one: kappa / eta_* too small");
  return std::min(p, 1.0);
}

}  // namespace

DiagnosticsReport conditional_diagnostics(
    const std::vector<PathObservables>& observations,
    const IncrementModel& model, double b) {
  if (observations.size() < kMinDiagnosticPaths)
    throw insufficient_sample_error(
        "conditional_diagnostics: need at least " +
        std::to_string(kMinDiagnosticPaths) + " accepted paths, have " +
        std::to_string(observations.size()));

  DiagnosticsReport rep;
  rep.b = b;
  rep.n_paths = observations.size();
  rep.a_scale = model.mean_excess_scale(b);
  double mu = model.mean_drift();
  rep.sigma = std::sqrt(model.variance());

  // Self-normalized weights, shifted by the max so the scale cancels.
  size_t n = observations.size();
  double m = -kInf;
  for (const auto& o : observations) m = std::max(m, o.log_weight);
  std::vector<double> w(n);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i)
    total += w[i] = std::exp(observations[i].log_weight - m);
  for (double& wi : w) wi /= total;

  std::vector<Atom> atoms(n);
  LimitLaw pass = passage_law(model);
  for (size_t i = 0; i < n; ++i)
    atoms[i] = {static_cast<double>(observations[i].tau) / rep.a_scale, w[i]};
  rep.passage.statistic = "passage_time";
  rep.passage.ks = weighted_ks(
      atoms, [&](double x) { return pass.cdf(x); }, &rep.passage.cdf);

  LimitLaw over = overshoot_law(model);
  for (size_t i = 0; i < n; ++i)
    atoms[i] = {observations[i].overshoot / rep.a_scale, w[i]};
  rep.overshoot.statistic = "overshoot";
  rep.overshoot.ks = weighted_ks(
      atoms, [&](double x) { return over.cdf(x); }, &rep.overshoot.cdf);

  rep.midpoint.statistic = "midpoint";
  if (std::isfinite(rep.sigma)) {
    for (size_t i = 0; i < n; ++i) {
      const auto& o = observations[i];
      double t = static_cast<double>(o.tau);
      atoms[i] = {(o.s_mid - 0.5 * t * mu) / (rep.sigma * std::sqrt(t)), w[i]};
    }
    // Midpoint functional marginal is N(0, 1/2): Φ(x√2) = erfc(−x)/2.
    rep.midpoint.ks = weighted_ks(
        atoms, [](double x) { return 0.5 * std::erfc(-x); }, &rep.midpoint.cdf);
  } else {
    rep.midpoint.ks = kNaN;
    rep.notes = "midpoint check skipped: increment variance diverges; ";
  }

  // Joint tail identity P(Y₀ > y₀, Y₁ > y₁) = P(Y₁ > y₀ + y₁) on a fixed
  // grid, with bootstrap SEs from a deterministic resampling stream.
  const double grid[3] = {0.5, 1.0, 2.0};
  std::vector<double> y0(n), y1(n);
  for (size_t i = 0; i < n; ++i) {
    y0[i] = -mu * static_cast<double>(observations[i].tau) / rep.a_scale;
    y1[i] = observations[i].overshoot / rep.a_scale;
  }
  auto joint_tail = [&](double u, double v, const std::vector<size_t>* idx) {
    double hit = 0.0, tot = 0.0;
    size_t count = idx ? idx->size() : n;
    for (size_t r = 0; r < count; ++r) {
      size_t i = idx ? (*idx)[r] : r;
      tot += w[i];
      if (y0[i] > u && y1[i] > v) hit += w[i];
    }
    return tot > 0.0 ? hit / tot : 0.0;
  };
  constexpr int kBoot = 200;
  Rng boot(0x9e3779b97f4a7c15ULL);
  std::vector<std::vector<size_t>> resamples(kBoot, std::vector<size_t>(n));
  for (auto& r : resamples)
    for (auto& i : r) i = static_cast<size_t>(boot.raw() % n);
  for (double u : grid)
    for (double v : grid) {
      JointCell cell;
      cell.y0 = u;
      cell.y1 = v;
      cell.empirical = joint_tail(u, v, nullptr);
      cell.target = over.survival(u + v);
      double s1 = 0.0, s2 = 0.0;
      for (const auto& r : resamples) {
        double p = joint_tail(u, v, &r);
        s1 += p;
        s2 += p * p;
      }
      cell.boot_se = std::sqrt(
          std::max(0.0, (s2 - s1 * s1 / kBoot) / (kBoot - 1.0)));
      rep.joint.push_back(cell);
    }

  rep.notes +=
      "KS thresholds and the joint grid are desk-scale diagnostic choices";
  return rep;
}

DiagnosticsReport conditional_diagnostics(
    const std::vector<ReplicationResult>& replications,
    const IncrementModel& model, double b) {
  std::vector<PathObservables> obs;
  obs.reserve(replications.size());
  for (const auto& r : replications)
    if (r.hit) obs.push_back(path_observables(r, b));
  return conditional_diagnostics(obs, model, b);
}

std::string diagnostics_to_json(const DiagnosticsReport& report) {
  nlohmann::json j;
  j["b"] = report.b;
  j["n_paths"] = report.n_paths;
  j["a_scale"] = report.a_scale;
  j["sigma"] = report.sigma;
  j["notes"] = report.notes;
  for (const KsCheck* chk :
       {&report.passage, &report.overshoot, &report.midpoint}) {
    nlohmann::json c;
    c["ks"] = chk->ks;
    auto& table = c["cdf"] = nlohmann::json::array();
    for (const CdfRow& row : chk->cdf)
      table.push_back({row.x, row.empirical, row.law});
    j["checks"][chk->statistic] = std::move(c);
  }
  auto& cells = j["joint"] = nlohmann::json::array();
  for (const JointCell& cell : report.joint)
    cells.push_back({{"y0", cell.y0},
                     {"y1", cell.y1},
                     {"empirical", cell.empirical},
                     {"target", cell.target},
                     {"boot_se", cell.boot_se}});
  return j.dump(2);
}

double coupling_probability(const IncrementModel& model,
                            const TuningParams& params, double b, double s) {
  return coupling_probability_of(plan_for_state(model, params, b, s));
}

CouplingResult coupled_replication(const IncrementModel& model,
                                   const TuningParams& tv_params, double b,
                                   Rng& rng, std::uint64_t step_cap) {
  if (tv_params.mode != Mode::TotalVariation)
    throw std::invalid_argument(
        "coupled_replication: needs TotalVariation-mode parameters");
  CouplingResult out;
  double s_hat = 0.0;
  for (std::uint64_t step = 1; step <= step_cap; ++step) {
    MixturePlan plan = plan_for_state(model, tv_params, b, s_hat);
    double p = coupling_probability_of(plan);
    double x_hat;
    if (p >= 1.0 || rng.uniform() < p) {
      x_hat = model.sample_nominal(rng);  // shared draw: X̂ = X̃
    } else {
      // Residual branch: rejection with proposal q_s and acceptance
      // 1 − p(s) f/q_s; expected extra draws amortize to one per step.
      for (;;) {
        Increment inc = sample_increment(plan, model, rng);
        double accept = 1.0 - p * std::exp(inc.log_weight);
        if (accept < -1e-9) {
          char msg[96];
          std::snprintf(msg, sizeof msg,
                        "coupling residual negative (%.3e) at x=%.6g", accept,
                        inc.x);
          throw residual_negativity_error(msg);
        }
        if (accept > 0.0 && rng.uniform() < accept) {
          x_hat = inc.x;
          break;
        }
      }
      // X̃ here is an independent nominal draw; nothing reported depends on
      // the S̃ path itself, so the draw is elided.
      if (out.n_b == CouplingResult::kNever) out.n_b = step;
    }
    s_hat += x_hat;
    if (s_hat > b) {
      out.tau = step;
      out.equal = out.n_b == step;
      return out;
    }
  }
  out.censored = true;
  out.tau = step_cap;
  return out;
}

}  // namespace ruinmc
