#include "saa/scalar_max.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace saa {

namespace {

constexpr double kInvPhi = 0.6180339887498948482;
constexpr int kMaxExpansions = 2000;

bool at_boundary(double t, double end) {
  return std::abs(end - t) <= 1e-12 * std::max(1.0, std::abs(end));
}

}  // namespace

ScalarMaxResult maximize_concave(const ConcaveFunction& fn, Interval domain, double width,
                                 double initial_step) {
  if (!domain.contains(0.0)) {
    throw std::invalid_argument("maximize_concave: 0 must lie inside the search domain");
  }
  ScalarMaxResult out;
  double lo = domain.lo;
  double hi = domain.hi;

  auto eval = [&](double t) {
    ++out.evaluations;
    const double v = fn.value(t);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  // Step from `from` by `step`, falling back to halfway to the domain end.
  auto advance = [&](double from, double step) {
    const double target = from + step;
    if (target > lo && target < hi) return target;
    const double end = step > 0.0 ? hi : lo;
    return from + 0.5 * (end - from);
  };

  const double h0 = eval(0.0);
  if (!std::isfinite(h0)) {
    throw std::domain_error("maximize_concave: function is not finite at 0");
  }

  double a = 0.0, b = 0.0;  // final bracket
  bool bracketed = false;

  double right = advance(0.0, initial_step);
  double h_right = eval(right);
  while (!std::isfinite(h_right)) {
    hi = right;
    right = advance(0.0, 0.5 * right);
    h_right = eval(right);
  }

  int direction = 0;
  if (h_right > h0) {
    direction = 1;
  } else {
    double left = advance(0.0, -initial_step);
    double h_left = eval(left);
    while (!std::isfinite(h_left)) {
      lo = left;
      left = advance(0.0, 0.5 * left);
      h_left = eval(left);
    }
    if (h_left > h0) {
      direction = -1;
      right = left;
      h_right = h_left;
    } else {
      a = left;
      b = right;
      bracketed = true;
    }
  }

  if (!bracketed) {
    double prev = 0.0;
    double cur = right;
    double h_cur = h_right;
    for (int it = 0; it < kMaxExpansions; ++it) {
      const double end = direction > 0 ? hi : lo;
      if (std::isfinite(end) && at_boundary(cur, end)) break;
      double next = advance(cur, 2.0 * (cur - prev));
      const double h_next = eval(next);
      if (!std::isfinite(h_next)) {
        (direction > 0 ? hi : lo) = next;
        continue;
      }
      if (h_next <= h_cur) {
        a = std::min(prev, next);
        b = std::max(prev, next);
        bracketed = true;
        break;
      }
      prev = cur;
      cur = next;
      h_cur = h_next;
    }
    if (!bracketed) {
      out.arg = cur;
      out.value = h_cur;
      out.converged = false;
      return out;
    }
  }

  // Golden section on [a, b].
  const double bracket_lo = a;
  const double bracket_hi = b;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double hc = eval(c);
  double hd = eval(d);
  while (b - a > width) {
    if (hc >= hd) {
      b = d;
      d = c;
      hd = hc;
      c = b - kInvPhi * (b - a);
      hc = eval(c);
    } else {
      a = c;
      c = d;
      hc = hd;
      d = a + kInvPhi * (b - a);
      hd = eval(d);
    }
  }
  double t = hc >= hd ? c : d;

  if (fn.derivatives) {
    // Safeguarded Newton on h'(t) = 0; h' is nonincreasing on the bracket.
    double lo_b = bracket_lo, hi_b = bracket_hi;
    for (int it = 0; it < 100; ++it) {
      const auto [slope, curvature] = fn.derivatives(t);
      ++out.evaluations;
      if (!std::isfinite(slope) || slope == 0.0) break;
      if (slope > 0.0) {
        lo_b = t;
      } else {
        hi_b = t;
      }
      double next = t - slope / curvature;
      if (!(curvature < 0.0) || !(next > lo_b && next < hi_b)) next = 0.5 * (lo_b + hi_b);
      const double step = std::abs(next - t);
      t = next;
      if (step <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
        break;
      }
    }
  }

  out.arg = t;
  out.value = eval(t);
  const double end_hi = hi, end_lo = lo;
  if ((std::isfinite(end_hi) && at_boundary(t, end_hi)) ||
      (std::isfinite(end_lo) && at_boundary(t, end_lo))) {
    out.converged = false;
  }
  return out;
}

}  // namespace saa
