#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saa/alloc_opt.hpp"
#include "saa/allocation.hpp"
#include "saa/grid.hpp"
#include "saa/loss_models.hpp"
#include "saa/rng.hpp"

namespace saa {

enum class RateFamily { gaussian, binomial };

/// Closed-form sequential allocation (pilot, then re-estimate and resample).
struct Algo1Config {
  std::size_t pilot = 10;           ///< N0 samples per point, at least 2
  std::size_t per_iteration = 0;    ///< N; 0 means max(d, n / 10)
  std::size_t total_budget = 0;     ///< n, pilot included
  double delta = 1.0;
  RateFamily family = RateFamily::gaussian;
  bool known_variance = true;       ///< Gaussian family: use the model's variances
  std::uint64_t seed = 0;
  double alpha_min = kDefaultAlphaMin;
  AscentSettings ascent{};
  bool warm_start = true;           ///< start each re-optimization at the previous allocation
};

/// EM-style sequential allocation with numerically estimated rates.
struct Algo2Config {
  std::optional<Allocation> initial;  ///< alpha^(0); uniform when absent
  std::size_t pilot = 2;              ///< samples per point drawn before the first iteration
  std::size_t per_iteration = 0;      ///< n samples scheduled per iteration
  double delta = 1.0;
  double tolerance = 1e-3;            ///< stop when max |alpha^(k+1) - alpha^(k)| < tolerance
  int max_iterations = 100;
  /// When set to gamma_c in [0, 1], run exactly K = floor(n * gamma_c)
  /// iterations and ignore `tolerance`.
  std::optional<double> budget_coupling;
  std::uint64_t seed = 0;
  double alpha_min = kDefaultAlphaMin;
  AscentSettings ascent{};
};

/// State after one iteration of a sequential algorithm. Record 0 is the state
/// before any scheduled sampling (the pilot for Algorithm 1, alpha^(0) for
/// Algorithm 2).
struct IterationRecord {
  int iteration = 0;
  std::vector<std::size_t> counts;  ///< cumulative samples per point
  std::vector<double> f_hat;        ///< sample means (NaN where no samples)
  std::vector<std::size_t> q_hat;
  Allocation alpha;
  std::optional<double> optimality_gap;
  double elapsed_seconds = 0.0;

  std::size_t total_samples() const;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  /// Non-fatal events: empty Q-hat, re-solved exponents and the like.
  std::vector<std::string> events;
  /// Algorithm 2 only: the allocation change fell below tolerance.
  bool converged = false;

  /// Scheduled iterations executed (records beyond the initial one).
  int iterations() const { return static_cast<int>(records.size()) - 1; }
};

/// Counts of N i.i.d. categorical draws with probabilities alpha.
std::vector<std::size_t> multinomial_schedule(const Allocation& alpha, std::size_t n_draws,
                                              Engine& rng);

struct PlugInOptions {
  std::optional<double> variance_x;  ///< known variances (Gaussian)
  std::optional<double> variance_y;
  int trials = 0;                    ///< binomial trial count
};

/// Closed-form pair rate with empirical means (and variances unless known)
/// plugged in. Binomial means are kept half a success away from 0 and m.
double estimate_pair_rate_closed_form(std::span<const double> samples_x,
                                      std::span<const double> samples_y, double alpha_x,
                                      double alpha_y, RateFamily family,
                                      const PlugInOptions& options = {});

/// Q-hat: points whose estimate exceeds the smallest estimate by more than delta.
/// NaN estimates are ignored.
std::vector<std::size_t> estimated_q_set(std::span<const double> f_hat, double delta);

RunTrace algo1_run(const DesignGrid& grid, const LossModel& model, const Algo1Config& cfg,
                   const std::optional<Allocation>& reference = std::nullopt);

RunTrace algo2_run(const DesignGrid& grid, const LossModel& model, const Algo2Config& cfg,
                   const std::optional<Allocation>& reference = std::nullopt);

/// L1 distance between two allocations.
double optimality_gap(const Allocation& estimate, const Allocation& reference);

}  // namespace saa
