// Built with -ffast-math when libmvec is available so the loops below map to
// vector exp. Arguments are never positive, so no overflow handling is needed.
#include "exp_sums.hpp"

#include <cmath>

#if defined(SAA_VECTOR_EXP) && defined(__x86_64__) && defined(__GNUC__) && !defined(__clang__)
#define SAA_CLONES __attribute__((target_clones("avx512f", "avx2", "default")))
#else
#define SAA_CLONES
#endif

namespace saa::detail {

SAA_CLONES
double exp_sum(const double* l, std::size_t n, double a, double b) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(a * l[i] - b);
  return s;
}

SAA_CLONES
ExpMoments exp_moments(const double* l, std::size_t n, double a, double b, double center) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(a * l[i] - b);
    const double c = l[i] - center;
    s0 += w;
    s1 += w * c;
    s2 += w * c * c;
  }
  return {s0, s1, s2};
}

}  // namespace saa::detail
