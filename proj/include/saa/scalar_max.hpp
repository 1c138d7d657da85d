#pragma once

#include <functional>
#include <utility>

#include "saa/cgf.hpp"

namespace saa {

/// A concave function of one variable. `derivatives`, when set, returns the
/// first and second derivative and enables a Newton polish of the argmax.
struct ConcaveFunction {
  std::function<double(double)> value;
  std::function<std::pair<double, double>(double)> derivatives;
};

struct ScalarMaxResult {
  double arg = 0.0;
  double value = 0.0;
  /// False when the supremum sits on the boundary of `domain` or could not
  /// be bracketed.
  bool converged = true;
  int evaluations = 0;
};

/// Maximizes a concave function over an open interval containing 0.
/// Brackets by step doubling from 0 (halving towards finite domain ends),
/// refines by golden section to bracket width `width`, then polishes with
/// safeguarded Newton on the derivative when derivatives are available.
/// Points where `value` is not finite are treated as lying outside the domain.
ScalarMaxResult maximize_concave(const ConcaveFunction& fn, Interval domain,
                                 double width = 1e-10, double initial_step = 1.0);

}  // namespace saa
