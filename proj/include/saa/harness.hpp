#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "saa/alloc_opt.hpp"
#include "saa/allocation.hpp"
#include "saa/grid.hpp"
#include "saa/loss_models.hpp"
#include "saa/sequential.hpp"

namespace saa {

enum class Scenario { gaussian_algo1, binomial_algo1, squared_algo2, ldp_validate };

std::string_view to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);

/// Explicit points, or `count` equispaced points on [lo, hi].
struct GridSpec {
  std::vector<double> points;
  double lo = -2.25;
  double hi = 2.25;
  std::size_t count = 46;

  DesignGrid build() const;
};

enum class ModelFamily { gaussian, binomial, squared_error };

std::string_view to_string(ModelFamily f);
std::optional<ModelFamily> parse_family(std::string_view name);

/// Loss model declaration. Gaussian and binomial means are
/// f(x) = curvature * (x - center)^2 + offset unless `means` is given; squared
/// error has f(x) = (x - noise_mean)^2 + noise_variance.
struct ModelSpec {
  ModelFamily family = ModelFamily::gaussian;
  double curvature = 1.0;
  double center = 0.0;
  double offset = 0.0;
  std::vector<double> means;
  double variance = 1.0;           ///< gaussian, every point
  std::vector<double> variances;   ///< gaussian, per point
  int trials = 20;                 ///< binomial
  double noise_mean = 0.0;         ///< squared error
  double noise_variance = 1.0;     ///< squared error

  std::vector<double> objective(const DesignGrid& grid) const;
  LossModel build(const DesignGrid& grid) const;
};

struct LdpSpec {
  double gamma = 0.0;
  std::vector<std::size_t> n_ladder{1000, 10000, 100000, 1000000};
  std::size_t mc_replications = 100000;
  /// Pair (x, y) for the event fhat(y) - fhat(x) >= gamma. Defaults: the
  /// ldp-validate scenario uses (0, 1); algorithm scenarios use the Q member
  /// with the smallest objective against the grid minimizer.
  std::optional<std::size_t> x;
  std::optional<std::size_t> y;
  /// Allocation of the pair; algorithm scenarios default to the reference.
  std::optional<double> alpha_x;
  std::optional<double> alpha_y;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::gaussian_algo1;
  GridSpec grid;
  ModelSpec model;
  double delta = 1.0;
  Algo1Config algo1;
  Algo2Config algo2;
  std::size_t replications = 1;
  std::uint64_t seed_base = 0;
  /// CSVs are written here when non-empty.
  std::string output_dir;
  /// Worker threads for replications; 0 picks the hardware concurrency.
  unsigned threads = 1;
  LdpSpec ldp;
  AscentSettings ascent;
  double alpha_min = kDefaultAlphaMin;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct OgQuantiles {
  int iteration = 0;
  std::size_t cumulative_samples = 0;
  double q10 = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
};

struct ReplicationResult {
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  Allocation final_alpha;
  std::vector<double> og;  ///< one entry per record
  std::vector<std::size_t> samples;
  std::vector<std::string> events;
};

struct LdpRow {
  std::size_t n = 0;
  double log_prob = 0.0;
  double implied_rate = 0.0;
  double analytic_rate = 0.0;
  bool exact = false;
  std::size_t events = 0;       ///< Monte Carlo event count
  bool few_events = false;      ///< fewer than 10 events observed
  bool lower_bound = false;     ///< no events; implied_rate is a lower bound
};

struct ExperimentSummary {
  Scenario scenario = Scenario::gaussian_algo1;
  std::vector<double> x;
  std::vector<double> f;
  std::optional<Allocation> reference;
  double reference_objective = 0.0;
  std::vector<std::size_t> q_members;
  std::vector<double> mean_final_alpha;
  std::vector<OgQuantiles> og_quantiles;
  std::vector<ReplicationResult> replications;
  std::vector<LdpRow> ldp;
  std::size_t ldp_x = 0;
  std::size_t ldp_y = 0;
  std::vector<std::string> written_files;
};

/// True-parameter allocation problem over Q(delta) = {x : f(x) > min f + delta}.
AllocProblem reference_problem(const LossModel& model, double delta,
                               double alpha_min = kDefaultAlphaMin, AscentSettings ascent = {});

/// Runs every replication with seed = seed_base + replication index,
/// aggregates OG quantiles and writes the CSVs when output_dir is set.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

struct LdpOptions {
  std::size_t mc_replications = 100000;
  std::uint64_t seed = 0;
};

/// -(1/n) log P(fhat(y) - fhat(x) >= gamma) along the ladder, with
/// alpha_x n and alpha_y n samples (rounded, at least 1) at the two points.
/// Gaussian models use the exact Normal tail; other models use Monte Carlo.
std::vector<LdpRow> ldp_validate(const LossModel& model, std::size_t x, std::size_t y,
                                 double gamma, double alpha_x, double alpha_y,
                                 std::span<const std::size_t> n_ladder,
                                 const LdpOptions& options = {});

/// log P(Z >= z) for standard normal Z, accurate far into the tail.
double log_normal_tail(double z);

/// Linear-interpolation sample quantile (p in [0, 1]) of unsorted values.
double sample_quantile(std::vector<double> values, double p);

/// Formats a double with 12 significant digits.
std::string format_number(double v);

void write_allocation_csv(const std::string& path, std::span<const double> x,
                          const Allocation& reference, std::span<const double> estimate);
void write_og_csv(const std::string& path, std::span<const OgQuantiles> rows);
void write_ldp_csv(const std::string& path, std::span<const LdpRow> rows);

}  // namespace saa
