#pragma once

#include <cstddef>

namespace saa::detail {

struct ExpMoments {
  double s0 = 0.0;  ///< sum w_i
  double s1 = 0.0;  ///< sum w_i (l_i - center)
  double s2 = 0.0;  ///< sum w_i (l_i - center)^2
};

/// sum_i exp(a * l_i - b). Callers keep a * l_i - b <= 0.
double exp_sum(const double* l, std::size_t n, double a, double b);

/// Weighted moments with w_i = exp(a * l_i - b).
ExpMoments exp_moments(const double* l, std::size_t n, double a, double b, double center);

}  // namespace saa::detail
