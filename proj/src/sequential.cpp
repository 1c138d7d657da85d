#include "saa/sequential.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include "saa/rate_functions.hpp"

namespace saa {

namespace {

constexpr std::uint64_t kSchedulerStream = 1ULL << 40;

using Clock = std::chrono::steady_clock;

double mean_of(std::span<const double> s) {
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

double variance_of(std::span<const double> s) {
  if (s.size() < 2) {
    throw std::invalid_argument("plug-in variance needs at least two samples");
  }
  const double m = mean_of(s);
  double ss = 0.0;
  for (double v : s) ss += (v - m) * (v - m);
  return ss / static_cast<double>(s.size() - 1);
}

double clamp_binomial_mean(double f_hat, std::size_t count, int trials) {
  const double margin = 0.5 / static_cast<double>(count);
  return std::clamp(f_hat, margin, trials - margin);
}

std::vector<Engine> point_streams(std::uint64_t seed, std::size_t d) {
  std::vector<Engine> out;
  out.reserve(d);
  for (std::size_t i = 0; i < d; ++i) out.push_back(make_stream(seed, i));
  return out;
}

std::vector<double> sample_means(const SampleStore& store) {
  std::vector<double> out(store.points(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < store.points(); ++i) {
    if (store.count(i) > 0) out[i] = store.mean(i);
  }
  return out;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::size_t IterationRecord::total_samples() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::vector<std::size_t> multinomial_schedule(const Allocation& alpha, std::size_t n_draws,
                                              Engine& rng) {
  std::vector<std::size_t> counts(alpha.size(), 0);
  if (n_draws == 0) return counts;
  std::discrete_distribution<std::size_t> pick(alpha.weights().begin(), alpha.weights().end());
  for (std::size_t j = 0; j < n_draws; ++j) ++counts[pick(rng)];
  return counts;
}

double estimate_pair_rate_closed_form(std::span<const double> samples_x,
                                      std::span<const double> samples_y, double alpha_x,
                                      double alpha_y, RateFamily family,
                                      const PlugInOptions& options) {
  if (samples_x.empty() || samples_y.empty()) {
    throw std::invalid_argument("plug-in rate needs samples at both points");
  }
  const double f_x = mean_of(samples_x);
  const double f_y = mean_of(samples_y);
  if (family == RateFamily::gaussian) {
    const double var_x = options.variance_x ? *options.variance_x : variance_of(samples_x);
    const double var_y = options.variance_y ? *options.variance_y : variance_of(samples_y);
    return pair_rate_gaussian(0.0, f_x, f_y, var_x, var_y, alpha_x, alpha_y).value;
  }
  if (options.trials < 1) throw std::invalid_argument("binomial plug-in needs the trial count");
  return pair_rate_binomial(clamp_binomial_mean(f_x, samples_x.size(), options.trials),
                            clamp_binomial_mean(f_y, samples_y.size(), options.trials),
                            options.trials, alpha_x, alpha_y)
      .value;
}

std::vector<std::size_t> estimated_q_set(std::span<const double> f_hat, double delta) {
  double f_min = std::numeric_limits<double>::infinity();
  for (double f : f_hat) {
    if (!std::isnan(f)) f_min = std::min(f_min, f);
  }
  std::vector<std::size_t> q;
  for (std::size_t i = 0; i < f_hat.size(); ++i) {
    if (!std::isnan(f_hat[i]) && f_hat[i] > f_min + delta) q.push_back(i);
  }
  return q;
}

double optimality_gap(const Allocation& estimate, const Allocation& reference) {
  if (estimate.size() != reference.size()) {
    throw std::invalid_argument("optimality_gap: allocations differ in dimension");
  }
  double gap = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) gap += std::abs(estimate[i] - reference[i]);
  return gap;
}

RunTrace algo1_run(const DesignGrid& grid, const LossModel& model, const Algo1Config& cfg,
                   const std::optional<Allocation>& reference) {
  const auto start = Clock::now();
  const std::size_t d = model.size();
  if (grid.size() != d) throw std::invalid_argument("algo1: grid and loss model sizes differ");
  if (cfg.pilot < 2) throw std::invalid_argument("algo1: pilot size must be at least 2");
  if (cfg.total_budget < d * cfg.pilot) {
    throw std::invalid_argument("algo1: total budget must cover the pilot (n >= d * N0)");
  }
  if (!(cfg.delta > 0.0)) throw std::invalid_argument("algo1: delta must be positive");
  if (reference && reference->size() != d) {
    throw std::invalid_argument("algo1: reference allocation has the wrong dimension");
  }
  const int trials = model.trials();
  if (cfg.family == RateFamily::binomial && trials < 1) {
    throw std::invalid_argument("algo1: binomial rates need a binomial loss model");
  }
  const std::size_t per_iteration =
      cfg.per_iteration > 0 ? cfg.per_iteration : std::max(d, cfg.total_budget / 10);

  std::vector<Engine> streams = point_streams(cfg.seed, d);
  Engine scheduler = make_stream(cfg.seed, kSchedulerStream);
  SampleStore store(d);
  for (std::size_t i = 0; i < d; ++i) store.draw(model, i, cfg.pilot, streams[i]);

  RunTrace trace;
  Allocation alpha = Allocation::uniform(d, cfg.alpha_min);
  for (int k = 0;; ++k) {
    std::vector<double> f_hat = sample_means(store);
    std::vector<std::size_t> q_hat = estimated_q_set(f_hat, cfg.delta);
    if (q_hat.empty()) {
      trace.events.push_back("iteration " + std::to_string(k) +
                             ": estimated Q is empty; previous allocation kept");
    } else {
      std::shared_ptr<const PairRateModel> rates;
      if (cfg.family == RateFamily::gaussian) {
        std::vector<double> var(d);
        for (std::size_t i = 0; i < d; ++i) {
          var[i] = cfg.known_variance ? model.variance(i) : store.variance(i);
        }
        rates = std::make_shared<GaussianPairRates>(f_hat, std::move(var));
      } else {
        std::vector<double> clamped(d);
        for (std::size_t i = 0; i < d; ++i) {
          clamped[i] = clamp_binomial_mean(f_hat[i], store.count(i), trials);
        }
        rates = std::make_shared<BinomialPairRates>(std::move(clamped), trials);
      }
      const AllocProblem problem(f_hat, q_hat, rates, cfg.alpha_min, cfg.ascent);
      alpha = optimize(problem, cfg.warm_start ? std::optional<Allocation>(alpha) : std::nullopt)
                  .alpha;
    }

    std::optional<double> og;
    if (reference) og = optimality_gap(alpha, *reference);
    trace.records.push_back(IterationRecord{k, store.counts(), std::move(f_hat),
                                            std::move(q_hat), alpha, og, seconds_since(start)});

    if (store.total() >= cfg.total_budget) break;
    const std::size_t batch = std::min(per_iteration, cfg.total_budget - store.total());
    const std::vector<std::size_t> counts = multinomial_schedule(alpha, batch, scheduler);
    for (std::size_t i = 0; i < d; ++i) store.draw(model, i, counts[i], streams[i]);
  }
  return trace;
}

RunTrace algo2_run(const DesignGrid& grid, const LossModel& model, const Algo2Config& cfg,
                   const std::optional<Allocation>& reference) {
  const auto start = Clock::now();
  const std::size_t d = model.size();
  if (grid.size() != d) throw std::invalid_argument("algo2: grid and loss model sizes differ");
  if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("algo2: tolerance must be positive");
  if (cfg.pilot < 1) throw std::invalid_argument("algo2: pilot must be at least 1 per point");
  if (!(cfg.delta > 0.0)) throw std::invalid_argument("algo2: delta must be positive");
  if (cfg.initial && cfg.initial->size() != d) {
    throw std::invalid_argument("algo2: initial allocation has the wrong dimension");
  }
  if (reference && reference->size() != d) {
    throw std::invalid_argument("algo2: reference allocation has the wrong dimension");
  }
  int iteration_limit = cfg.max_iterations;
  if (cfg.budget_coupling) {
    const double g = *cfg.budget_coupling;
    if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument("algo2: coupling must be in [0, 1]");
    iteration_limit =
        static_cast<int>(std::floor(static_cast<double>(cfg.per_iteration) * g));
  }

  std::vector<Engine> streams = point_streams(cfg.seed, d);
  Engine scheduler = make_stream(cfg.seed, kSchedulerStream);
  SampleStore store(d);
  for (std::size_t i = 0; i < d; ++i) store.draw(model, i, cfg.pilot, streams[i]);

  RunTrace trace;
  Allocation alpha = cfg.initial ? *cfg.initial : Allocation::uniform(d, cfg.alpha_min);
  auto record = [&](int k, std::vector<double> f_hat, std::vector<std::size_t> q_hat) {
    std::optional<double> og;
    if (reference) og = optimality_gap(alpha, *reference);
    trace.records.push_back(IterationRecord{k, store.counts(), std::move(f_hat),
                                            std::move(q_hat), alpha, og, seconds_since(start)});
  };
  record(0, sample_means(store), {});

  for (int k = 1; k <= iteration_limit; ++k) {
    const std::vector<std::size_t> counts =
        multinomial_schedule(alpha, cfg.per_iteration, scheduler);
    for (std::size_t i = 0; i < d; ++i) store.draw(model, i, counts[i], streams[i]);

    std::vector<double> f_hat = sample_means(store);
    std::vector<std::size_t> q_hat = estimated_q_set(f_hat, cfg.delta);
    Allocation next = alpha;
    if (q_hat.empty()) {
      trace.events.push_back("iteration " + std::to_string(k) +
                             ": estimated Q is empty; previous allocation kept");
    } else {
      std::vector<std::shared_ptr<const Cgf>> cgfs;
      cgfs.reserve(d);
      for (std::size_t i = 0; i < d; ++i) {
        const auto s = store.samples(i);
        cgfs.push_back(std::make_shared<EmpiricalCgf>(std::vector<double>(s.begin(), s.end())));
      }

      // Exponent step: t(x, y) maximizing -J_hat at the current allocation.
      std::vector<double> exponents(d * d, std::numeric_limits<double>::quiet_NaN());
      for (std::size_t x : q_hat) {
        for (std::size_t y = 0; y < d; ++y) {
          if (!(f_hat[y] < f_hat[x])) continue;
          RateResult r = pair_rate_numeric(0.0, alpha[x], alpha[y], *cgfs[x], *cgfs[y]);
          if (!r.converged || !std::isfinite(r.t_star)) {
            // The empirical supports separate, so the transform is unbounded;
            // re-solve on a finite window around the origin.
            const double spread = cgfs[y]->eval(0.0).curvature / alpha[y] +
                                  cgfs[x]->eval(0.0).curvature / alpha[x];
            const double bound = 100.0 / std::max(spread, 1e-8);
            r = pair_rate_numeric(0.0, alpha[x], alpha[y], *cgfs[x], *cgfs[y],
                                  Interval{-bound, bound});
            trace.events.push_back("iteration " + std::to_string(k) + ": exponent for pair (" +
                                   std::to_string(x) + ", " + std::to_string(y) +
                                   ") re-solved on |t| < " + std::to_string(bound));
          }
          exponents[x * d + y] = r.t_star;
        }
      }

      // Allocation step with every exponent frozen.
      auto rates = std::make_shared<FrozenExponentRates>(cgfs, std::move(exponents));
      std::vector<double> f_problem = f_hat;
      const AllocProblem problem(std::move(f_problem), q_hat, rates, cfg.alpha_min, cfg.ascent);
      next = optimize(problem, alpha).alpha;
    }

    double change = 0.0;
    for (std::size_t i = 0; i < d; ++i) change = std::max(change, std::abs(next[i] - alpha[i]));
    alpha = next;
    record(k, std::move(f_hat), std::move(q_hat));
    if (!cfg.budget_coupling && change < cfg.tolerance) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

}  // namespace saa
