#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "saa/allocation.hpp"
#include "saa/cgf.hpp"
#include "saa/loss_models.hpp"

namespace saa {

/// A rate value with the optimizing exponent. Rates are reported as positive
/// decay rates; the large-deviations limit is their negation.
struct RateResult {
  double value = 0.0;
  double t_star = 0.0;
  bool converged = true;
  int iterations = 0;
};

/// Grid points whose objective exceeds the optimum by more than eps.
struct QSet {
  std::vector<std::size_t> members;
  /// eps minus the discretization error; always positive.
  double delta = 0.0;
};

/// alpha_y * cgf_y(t / alpha_y) + alpha_x * cgf_x(-t / alpha_x), the scaled
/// limiting CGF of n (fhat(y) - fhat(x)). Propagates CgfDomainError.
double phi(double t, double alpha_x, double alpha_y, const Cgf& cgf_x, const Cgf& cgf_y);

/// Legendre-Fenchel transform sup_t (t gamma - phi(t)) computed numerically.
/// `domain` further restricts the search interval for t; the interval
/// implied by the CGF domains is always applied. The value is clamped at 0.
RateResult pair_rate_numeric(double gamma, double alpha_x, double alpha_y, const Cgf& cgf_x,
                             const Cgf& cgf_y, std::optional<Interval> domain = std::nullopt);

/// Closed form for Gaussian losses:
/// (gamma - (f_y - f_x))^2 / (2 (var_y / alpha_y + var_x / alpha_x)).
RateResult pair_rate_gaussian(double gamma, double f_x, double f_y, double var_x, double var_y,
                              double alpha_x, double alpha_y);

/// Closed form for binomial losses at gamma = 0, using the explicit
/// maximizing exponent t* = log(f_x (m - f_y) / (f_y (m - f_x))) / (1/alpha_x + 1/alpha_y).
RateResult pair_rate_binomial(double f_x, double f_y, int trials, double alpha_x, double alpha_y);

/// Inputs for one ordered pair (x, y) of design points.
struct PairInputs {
  double f_x = 0.0;
  double f_y = 0.0;
  double alpha_x = 0.5;
  double alpha_y = 0.5;
  const Cgf* cgf_x = nullptr;
  const Cgf* cgf_y = nullptr;
};

/// Decay rate of P(fhat(y) - fhat(x) >= gamma): I(gamma) when
/// f_y - f_x < gamma, otherwise 0 (the event is typical).
double misorder_rate(double gamma, const PairInputs& pair);

/// Members of {x : f(x) > f_star + eps}. Throws std::invalid_argument when
/// eps does not exceed the discretization error min f - f_star.
QSet q_set(std::span<const double> f_values, double f_star, double eps);

enum class RateBackend { closed_form, numeric };

/// Regret decay rate: min over x in Q of sum_{y : f(y) < f(x)} I(alpha_x, alpha_y)
/// with I taken at gamma = 0. Throws std::domain_error for an empty Q.
double regret_rate(const LossModel& model, std::span<const double> f_values, double f_star,
                   double eps, const Allocation& alpha, RateBackend backend);

}  // namespace saa
