#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "saa/allocation.hpp"
#include "saa/cgf.hpp"

namespace saa {

/// One pair term I(alpha_x, alpha_y) with its gradient and Hessian.
struct PairTerm {
  double value = 0.0;
  double d_alpha_x = 0.0;
  double d_alpha_y = 0.0;
  double h_xx = 0.0;
  double h_xy = 0.0;
  double h_yy = 0.0;
};

/// Evaluates the pair rates entering the allocation objective. x is the
/// worse point of the pair (f(x) > f(y)).
class PairRateModel {
 public:
  virtual ~PairRateModel() = default;
  virtual PairTerm evaluate(std::size_t x, std::size_t y, double alpha_x, double alpha_y) const = 0;
  virtual double value(std::size_t x, std::size_t y, double alpha_x, double alpha_y) const {
    return evaluate(x, y, alpha_x, alpha_y).value;
  }
};

/// Closed-form Gaussian rates at gamma = 0.
class GaussianPairRates final : public PairRateModel {
 public:
  GaussianPairRates(std::vector<double> means, std::vector<double> variances);
  PairTerm evaluate(std::size_t x, std::size_t y, double alpha_x, double alpha_y) const override;
  double value(std::size_t x, std::size_t y, double alpha_x, double alpha_y) const override;

 private:
  std::vector<double> means_;
  std::vector<double> variances_;
};

/// Closed-form binomial rates at gamma = 0; gradients by the envelope theorem.
class BinomialPairRates final : public PairRateModel {
 public:
  BinomialPairRates(std::vector<double> means, int trials);
  PairTerm evaluate(std::size_t x, std::size_t y, double alpha_x, double alpha_y) const override;
  double value(std::size_t x, std::size_t y, double alpha_x, double alpha_y) const override;

 private:
  std::vector<double> means_;
  int trials_;
};

/// Rates from numerical Legendre-Fenchel transforms of arbitrary CGFs at
/// gamma = 0; gradients by the envelope theorem at the computed t*.
class NumericPairRates final : public PairRateModel {
 public:
  explicit NumericPairRates(std::vector<std::shared_ptr<const Cgf>> cgfs);
  PairTerm evaluate(std::size_t x, std::size_t y, double alpha_x, double alpha_y) const override;
  double value(std::size_t x, std::size_t y, double alpha_x, double alpha_y) const override;

 private:
  std::vector<std::shared_ptr<const Cgf>> cgfs_;
};

/// Pair terms with the exponent frozen per pair:
/// -alpha_y cgf_y(t_xy / alpha_y) - alpha_x cgf_x(-t_xy / alpha_x).
/// Concave in (alpha_x, alpha_y); gradients are exact.
class FrozenExponentRates final : public PairRateModel {
 public:
  /// `exponents` is a d x d row-major matrix indexed [x * d + y].
  FrozenExponentRates(std::vector<std::shared_ptr<const Cgf>> cgfs, std::vector<double> exponents);
  PairTerm evaluate(std::size_t x, std::size_t y, double alpha_x, double alpha_y) const override;
  double value(std::size_t x, std::size_t y, double alpha_x, double alpha_y) const override;

  double exponent(std::size_t x, std::size_t y) const { return exponents_[x * cgfs_.size() + y]; }

 private:
  std::vector<std::shared_ptr<const Cgf>> cgfs_;
  std::vector<double> exponents_;
};

enum class AscentMethod {
  /// Log-barrier Newton method on the epigraph form max z s.t. g_x >= z.
  barrier_newton,
  /// Projected supergradient ascent with steps step_scale / sqrt(k).
  supergradient,
};

struct AscentSettings {
  AscentMethod method = AscentMethod::barrier_newton;
  /// Supergradient: step k is step_scale / sqrt(k). Zero picks a scale that
  /// moves the first iterate by 0.1 in Euclidean norm.
  double step_scale = 0.0;
  /// Supergradient iterations, or Newton steps for the barrier method.
  int max_iterations = 10000;
  /// Supergradient: stop once the best objective improved by less than
  /// `tolerance` over `patience` consecutive iterations.
  int patience = 50;
  double tolerance = 1e-9;
  /// Barrier: stop once the duality-gap bound falls below this fraction of
  /// the objective scale.
  double relative_gap = 1e-11;
};

/// max over the simplex of min_{x in Q} sum_{y : f(y) < f(x)} I(alpha_x, alpha_y).
class AllocProblem {
 public:
  AllocProblem(std::vector<double> f_values, std::vector<std::size_t> q_members,
               std::shared_ptr<const PairRateModel> rates, double alpha_min = kDefaultAlphaMin,
               AscentSettings settings = {});

  std::size_t size() const { return f_values_.size(); }
  std::span<const double> f_values() const { return f_values_; }
  std::span<const std::size_t> q_members() const { return q_members_; }
  /// Points y with f(y) < f(x) for the i-th member x of Q.
  std::span<const std::size_t> better_points(std::size_t q_position) const {
    return better_[q_position];
  }
  const PairRateModel& rates() const { return *rates_; }
  double alpha_min() const { return alpha_min_; }
  const AscentSettings& settings() const { return settings_; }

 private:
  std::vector<double> f_values_;
  std::vector<std::size_t> q_members_;
  std::vector<std::vector<std::size_t>> better_;
  std::shared_ptr<const PairRateModel> rates_;
  double alpha_min_;
  AscentSettings settings_;
};

/// Inner sum for the Q member at `q_position`.
double row_value(const Allocation& alpha, const AllocProblem& problem, std::size_t q_position);

struct ObjectiveValue {
  double value = 0.0;
  /// Position in problem.q_members() of the lowest-index minimizing row.
  std::size_t active = 0;
};

ObjectiveValue evaluate_objective(const Allocation& alpha, const AllocProblem& problem);

double objective(const Allocation& alpha, const AllocProblem& problem);

/// Gradient of the row at `q_position`.
std::vector<double> row_gradient(const Allocation& alpha, const AllocProblem& problem,
                                 std::size_t q_position);
/// Gradient of the active row (lowest index on ties). Pair gradients come
/// from the envelope theorem at each pair's optimal exponent.
std::vector<double> supergradient(const Allocation& alpha, const AllocProblem& problem);

struct OptimizeResult {
  Allocation alpha;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Best objective after each iteration (index 0 is the start point).
  std::vector<double> best_trace;
};

/// Maximizes the allocation objective with the configured method and returns
/// the best iterate. Starts from the uniform allocation unless `start` is
/// given.
OptimizeResult optimize(const AllocProblem& problem,
                        const std::optional<Allocation>& start = std::nullopt);

/// Exhaustive search over the simplex lattice with the given spacing.
/// Lattice points are lifted onto the alpha_min floor. Needs d <= 4.
Allocation brute_force_oracle(const AllocProblem& problem, double resolution);

}  // namespace saa
