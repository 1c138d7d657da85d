#include "saa/rate_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "saa/scalar_max.hpp"

namespace saa {

namespace {

void check_alphas(double alpha_x, double alpha_y) {
  if (!(alpha_x > 0.0) || !(alpha_y > 0.0) || alpha_x > 1.0 || alpha_y > 1.0) {
    throw std::invalid_argument("pair allocations must lie in (0, 1]");
  }
}

// Interval of t for which both CGF arguments are in their domains.
Interval t_domain(double alpha_x, double alpha_y, const Cgf& cgf_x, const Cgf& cgf_y) {
  const Interval dx = cgf_x.domain();
  const Interval dy = cgf_y.domain();
  Interval out;
  out.lo = std::max(alpha_y * dy.lo, -alpha_x * dx.hi);
  out.hi = std::min(alpha_y * dy.hi, -alpha_x * dx.lo);
  return out;
}

}  // namespace

double phi(double t, double alpha_x, double alpha_y, const Cgf& cgf_x, const Cgf& cgf_y) {
  check_alphas(alpha_x, alpha_y);
  return alpha_y * cgf_y.value(t / alpha_y) + alpha_x * cgf_x.value(-t / alpha_x);
}

RateResult pair_rate_numeric(double gamma, double alpha_x, double alpha_y, const Cgf& cgf_x,
                             const Cgf& cgf_y, std::optional<Interval> domain) {
  check_alphas(alpha_x, alpha_y);
  if (!std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite");
  Interval dom = t_domain(alpha_x, alpha_y, cgf_x, cgf_y);
  if (domain) {
    dom.lo = std::max(dom.lo, domain->lo);
    dom.hi = std::min(dom.hi, domain->hi);
  }
  if (!dom.contains(0.0)) {
    throw std::invalid_argument("pair_rate_numeric: 0 must be interior to the t domain");
  }

  ConcaveFunction fn;
  fn.value = [&](double t) {
    const double ty = t / alpha_y;
    const double tx = -t / alpha_x;
    // Unbounded transforms drive the bracket to overflow; treat that as outside.
    if (!dom.contains(t) || !std::isfinite(ty) || !std::isfinite(tx)) {
      return -std::numeric_limits<double>::infinity();
    }
    return t * gamma - (alpha_y * cgf_y.value(ty) + alpha_x * cgf_x.value(tx));
  };
  fn.derivatives = [&](double t) {
    const CgfPoint py = cgf_y.eval(t / alpha_y);
    const CgfPoint px = cgf_x.eval(-t / alpha_x);
    const double slope = gamma - py.slope + px.slope;
    const double curvature = -(py.curvature / alpha_y + px.curvature / alpha_x);
    return std::pair{slope, curvature};
  };

  // Scale the first probe to the natural width of phi: Var[n (fhat_y - fhat_x)]/n.
  const double spread =
      cgf_y.eval(0.0).curvature / alpha_y + cgf_x.eval(0.0).curvature / alpha_x;
  const double step = spread > 0.0 && std::isfinite(spread)
                          ? std::clamp(1.0 / spread, 1e-8, 1e8) * std::max(1.0, std::abs(gamma))
                          : 1.0;
  const ScalarMaxResult r = maximize_concave(fn, dom, 1e-10, step);
  RateResult out;
  out.value = std::max(0.0, r.value);
  out.t_star = r.arg;
  out.converged = r.converged;
  out.iterations = r.evaluations;
  return out;
}

RateResult pair_rate_gaussian(double gamma, double f_x, double f_y, double var_x, double var_y,
                              double alpha_x, double alpha_y) {
  check_alphas(alpha_x, alpha_y);
  if (!(var_x > 0.0) || !(var_y > 0.0)) {
    throw std::invalid_argument("pair_rate_gaussian: variances must be positive");
  }
  const double spread = var_y / alpha_y + var_x / alpha_x;
  const double gap = gamma - (f_y - f_x);
  return {gap * gap / (2.0 * spread), gap / spread, true, 0};
}

RateResult pair_rate_binomial(double f_x, double f_y, int trials, double alpha_x, double alpha_y) {
  check_alphas(alpha_x, alpha_y);
  const double m = trials;
  if (trials < 1 || !(f_x > 0.0 && f_x < m) || !(f_y > 0.0 && f_y < m)) {
    throw std::invalid_argument("pair_rate_binomial: need 0 < f < m at both points");
  }
  const double t_star = std::log(f_x * (m - f_y) / (f_y * (m - f_x))) /
                        (1.0 / alpha_x + 1.0 / alpha_y);
  const BinomialCgf cgf_x(f_x / m, trials);
  const BinomialCgf cgf_y(f_y / m, trials);
  const double value =
      -alpha_y * cgf_y.value(t_star / alpha_y) - alpha_x * cgf_x.value(-t_star / alpha_x);
  return {std::max(0.0, value), t_star, true, 0};
}

double misorder_rate(double gamma, const PairInputs& pair) {
  if (!(gamma > 0.0)) throw std::invalid_argument("misorder_rate: gamma must be positive");
  if (pair.cgf_x == nullptr || pair.cgf_y == nullptr) {
    throw std::invalid_argument("misorder_rate: both CGFs are required");
  }
  if (!(pair.f_y - pair.f_x < gamma)) return 0.0;
  return pair_rate_numeric(gamma, pair.alpha_x, pair.alpha_y, *pair.cgf_x, *pair.cgf_y).value;
}

QSet q_set(std::span<const double> f_values, double f_star, double eps) {
  if (f_values.empty()) throw std::invalid_argument("q_set: no objective values");
  const double f_min = *std::min_element(f_values.begin(), f_values.end());
  const double discretization = f_min - f_star;
  QSet out;
  out.delta = eps - discretization;
  if (!(out.delta > 0.0)) {
    std::ostringstream msg;
    msg << "eps = " << eps << " must exceed the discretization error f(x_hat) - f(x*) = "
        << discretization;
    throw std::invalid_argument(msg.str());
  }
  for (std::size_t i = 0; i < f_values.size(); ++i) {
    if (f_values[i] > f_star + eps) out.members.push_back(i);
  }
  return out;
}

double regret_rate(const LossModel& model, std::span<const double> f_values, double f_star,
                   double eps, const Allocation& alpha, RateBackend backend) {
  const std::size_t d = model.size();
  if (f_values.size() != d || alpha.size() != d) {
    throw std::invalid_argument("regret_rate: dimension mismatch");
  }
  const QSet q = q_set(f_values, f_star, eps);
  if (q.members.empty()) {
    throw std::domain_error("regret event has zero probability at this eps (Q is empty)");
  }

  auto pair_rate = [&](std::size_t x, std::size_t y) {
    if (backend == RateBackend::numeric) {
      return pair_rate_numeric(0.0, alpha[x], alpha[y], *model.cgf(x), *model.cgf(y)).value;
    }
    switch (model.kind()) {
      case LossKind::gaussian:
        return pair_rate_gaussian(0.0, model.mean(x), model.mean(y), model.variance(x),
                                  model.variance(y), alpha[x], alpha[y])
            .value;
      case LossKind::binomial:
        return pair_rate_binomial(model.mean(x), model.mean(y), model.trials(), alpha[x],
                                  alpha[y])
            .value;
      default:
        throw std::invalid_argument("closed-form rates exist only for Gaussian and binomial losses");
    }
  };

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t x : q.members) {
    double sum = 0.0;
    for (std::size_t y = 0; y < d; ++y) {
      if (f_values[y] < f_values[x]) sum += pair_rate(x, y);
    }
    best = std::min(best, sum);
  }
  return best;
}

}  // namespace saa
