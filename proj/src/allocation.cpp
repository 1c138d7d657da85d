#include "saa/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace saa {

Allocation::Allocation(std::vector<double> weights, double alpha_min)
    : weights_(std::move(weights)), alpha_min_(alpha_min) {
  const std::size_t d = weights_.size();
  if (d < 2) throw std::invalid_argument("allocation needs at least two entries");
  if (!(alpha_min >= 0.0) || alpha_min * static_cast<double>(d) > 1.0) {
    throw std::invalid_argument("allocation floor must satisfy 0 <= alpha_min <= 1/d");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double a = weights_[i];
    if (!std::isfinite(a) || a < alpha_min || a > 1.0) {
      throw std::invalid_argument("allocation entry " + std::to_string(i) + " = " +
                                  std::to_string(a) + " outside [alpha_min, 1]");
    }
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("allocation weights sum to " + std::to_string(sum) + ", not 1");
  }
}

Allocation Allocation::uniform(std::size_t d, double alpha_min) {
  return Allocation(std::vector<double>(d, 1.0 / static_cast<double>(d)), alpha_min);
}

Allocation Allocation::projected(std::span<const double> weights, double alpha_min) {
  return Allocation(project_to_simplex(weights, alpha_min), alpha_min);
}

std::vector<double> project_to_simplex(std::span<const double> v, double alpha_min) {
  const std::size_t d = v.size();
  if (d == 0) throw std::invalid_argument("cannot project an empty vector");
  const double radius = 1.0 - alpha_min * static_cast<double>(d);
  if (radius < 0.0) throw std::invalid_argument("alpha_min too large for dimension");

  // Shift by the floor, project onto {b >= 0, sum b = radius}, shift back.
  std::vector<double> u(v.begin(), v.end());
  for (double& x : u) x -= alpha_min;
  std::vector<double> sorted = u;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) tau = candidate;
  }
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = std::max(u[i] - tau, 0.0) + alpha_min;

  // Absorb rounding so the sum is 1 to machine precision.
  const double excess = std::accumulate(out.begin(), out.end(), 0.0) - 1.0;
  const auto big = std::max_element(out.begin(), out.end());
  *big -= excess;
  return out;
}

}  // namespace saa
