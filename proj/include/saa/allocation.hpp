#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace saa {

inline constexpr double kDefaultAlphaMin = 1e-6;

/// Linear allocation rule: fraction of the sampling budget per design point.
/// Weights sum to 1 within 1e-12 and each lies in [alpha_min, 1].
class Allocation {
 public:
  explicit Allocation(std::vector<double> weights, double alpha_min = kDefaultAlphaMin);

  static Allocation uniform(std::size_t d, double alpha_min = kDefaultAlphaMin);

  /// Nearest feasible allocation (Euclidean) to arbitrary weights.
  static Allocation projected(std::span<const double> weights,
                              double alpha_min = kDefaultAlphaMin);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  double alpha_min() const { return alpha_min_; }

 private:
  std::vector<double> weights_;
  double alpha_min_;
};

/// Euclidean projection of v onto {a : sum a = 1, a_i >= alpha_min}.
std::vector<double> project_to_simplex(std::span<const double> v, double alpha_min);

}  // namespace saa
