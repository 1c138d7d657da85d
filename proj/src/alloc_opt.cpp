#include "saa/alloc_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "saa/rate_functions.hpp"

namespace saa {

namespace {

std::string pair_name(std::size_t x, std::size_t y) {
  return "(" + std::to_string(x) + ", " + std::to_string(y) + ")";
}

// d/d alpha of -alpha * cgf(theta) at fixed t, where theta = +-t / alpha.
double envelope_slope(const CgfPoint& p, double theta) { return -p.value + theta * p.slope; }

// Pair term -alpha_y cgf_y(t / alpha_y) - alpha_x cgf_x(-t / alpha_x) at the
// given t. With `optimal_t` the Hessian includes the response of t* to alpha.
PairTerm envelope_term(const Cgf& cx, const Cgf& cy, double ax, double ay, double t,
                       bool optimal_t) {
  const double theta_y = t / ay;
  const double theta_x = -t / ax;
  const CgfPoint py = cy.eval(theta_y);
  const CgfPoint px = cx.eval(theta_x);
  PairTerm out;
  out.value = -ay * py.value - ax * px.value;
  out.d_alpha_x = envelope_slope(px, theta_x);
  out.d_alpha_y = envelope_slope(py, theta_y);
  const double cy_a = py.curvature / ay;
  const double cx_a = px.curvature / ax;
  out.h_xx = -theta_x * theta_x * cx_a;
  out.h_yy = -theta_y * theta_y * cy_a;
  out.h_xy = 0.0;
  if (optimal_t) {
    const double f_tt = -(cy_a + cx_a);
    if (f_tt < 0.0) {
      const double f_tx = -theta_x * cx_a;
      const double f_ty = theta_y * cy_a;
      out.h_xx -= f_tx * f_tx / f_tt;
      out.h_yy -= f_ty * f_ty / f_tt;
      out.h_xy = -f_tx * f_ty / f_tt;
    }
  }
  return out;
}

}  // namespace

GaussianPairRates::GaussianPairRates(std::vector<double> means, std::vector<double> variances)
    : means_(std::move(means)), variances_(std::move(variances)) {
  if (means_.size() != variances_.size()) {
    throw std::invalid_argument("GaussianPairRates: mean and variance lengths differ");
  }
  for (double v : variances_) {
    if (!(v > 0.0)) throw std::invalid_argument("GaussianPairRates: variances must be positive");
  }
}

double GaussianPairRates::value(std::size_t x, std::size_t y, double ax, double ay) const {
  const double gap = means_[x] - means_[y];
  return gap * gap / (2.0 * (variances_[y] / ay + variances_[x] / ax));
}

PairTerm GaussianPairRates::evaluate(std::size_t x, std::size_t y, double ax, double ay) const {
  const double gap = means_[x] - means_[y];
  const double spread = variances_[y] / ay + variances_[x] / ax;
  const double k = gap * gap / (2.0 * spread * spread);
  const double vx = variances_[x] / (ax * ax);
  const double vy = variances_[y] / (ay * ay);
  const double g2 = gap * gap / (spread * spread);
  PairTerm out;
  out.value = gap * gap / (2.0 * spread);
  out.d_alpha_x = k * variances_[x] / (ax * ax);
  out.d_alpha_y = k * variances_[y] / (ay * ay);
  out.h_xx = g2 * vx * (vx / spread - 1.0 / ax);
  out.h_yy = g2 * vy * (vy / spread - 1.0 / ay);
  out.h_xy = g2 * vx * vy / spread;
  return out;
}

BinomialPairRates::BinomialPairRates(std::vector<double> means, int trials)
    : means_(std::move(means)), trials_(trials) {
  for (double f : means_) {
    if (!(f > 0.0 && f < trials_)) {
      throw std::invalid_argument("BinomialPairRates: need 0 < f < m");
    }
  }
}

double BinomialPairRates::value(std::size_t x, std::size_t y, double ax, double ay) const {
  return pair_rate_binomial(means_[x], means_[y], trials_, ax, ay).value;
}

PairTerm BinomialPairRates::evaluate(std::size_t x, std::size_t y, double ax, double ay) const {
  const RateResult r = pair_rate_binomial(means_[x], means_[y], trials_, ax, ay);
  const BinomialCgf cx(means_[x] / trials_, trials_);
  const BinomialCgf cy(means_[y] / trials_, trials_);
  PairTerm out = envelope_term(cx, cy, ax, ay, r.t_star, true);
  out.value = r.value;
  return out;
}

NumericPairRates::NumericPairRates(std::vector<std::shared_ptr<const Cgf>> cgfs)
    : cgfs_(std::move(cgfs)) {
  for (const auto& c : cgfs_) {
    if (!c) throw std::invalid_argument("NumericPairRates: null CGF");
  }
}

double NumericPairRates::value(std::size_t x, std::size_t y, double ax, double ay) const {
  return pair_rate_numeric(0.0, ax, ay, *cgfs_[x], *cgfs_[y]).value;
}

PairTerm NumericPairRates::evaluate(std::size_t x, std::size_t y, double ax, double ay) const {
  const RateResult r = pair_rate_numeric(0.0, ax, ay, *cgfs_[x], *cgfs_[y]);
  if (!r.converged) {
    throw std::runtime_error("inner exponent did not converge for pair " + pair_name(x, y));
  }
  PairTerm out = envelope_term(*cgfs_[x], *cgfs_[y], ax, ay, r.t_star, true);
  out.value = r.value;
  return out;
}

FrozenExponentRates::FrozenExponentRates(std::vector<std::shared_ptr<const Cgf>> cgfs,
                                         std::vector<double> exponents)
    : cgfs_(std::move(cgfs)), exponents_(std::move(exponents)) {
  if (exponents_.size() != cgfs_.size() * cgfs_.size()) {
    throw std::invalid_argument("FrozenExponentRates: exponent matrix must be d x d");
  }
}

double FrozenExponentRates::value(std::size_t x, std::size_t y, double ax, double ay) const {
  const double t = exponent(x, y);
  if (std::isnan(t)) throw std::logic_error("no frozen exponent for pair " + pair_name(x, y));
  return -ay * cgfs_[y]->value(t / ay) - ax * cgfs_[x]->value(-t / ax);
}

PairTerm FrozenExponentRates::evaluate(std::size_t x, std::size_t y, double ax, double ay) const {
  const double t = exponent(x, y);
  if (std::isnan(t)) throw std::logic_error("no frozen exponent for pair " + pair_name(x, y));
  return envelope_term(*cgfs_[x], *cgfs_[y], ax, ay, t, false);
}

AllocProblem::AllocProblem(std::vector<double> f_values, std::vector<std::size_t> q_members,
                           std::shared_ptr<const PairRateModel> rates, double alpha_min,
                           AscentSettings settings)
    : f_values_(std::move(f_values)),
      q_members_(std::move(q_members)),
      rates_(std::move(rates)),
      alpha_min_(alpha_min),
      settings_(settings) {
  const std::size_t d = f_values_.size();
  if (d < 2) throw std::invalid_argument("allocation problem needs at least two points");
  if (!rates_) throw std::invalid_argument("allocation problem needs a pair-rate model");
  if (q_members_.empty()) throw std::invalid_argument("allocation problem: Q is empty");
  if (!(alpha_min >= 0.0) || alpha_min * static_cast<double>(d) >= 1.0) {
    throw std::invalid_argument("allocation problem: alpha_min must be in [0, 1/d)");
  }
  for (std::size_t x : q_members_) {
    if (x >= d) throw std::invalid_argument("allocation problem: Q index out of range");
    std::vector<std::size_t> better;
    for (std::size_t y = 0; y < d; ++y) {
      if (f_values_[y] < f_values_[x]) better.push_back(y);
    }
    if (better.empty()) {
      throw std::invalid_argument("allocation problem: Q member " + std::to_string(x) +
                                  " is a grid minimizer, so its inner sum is empty");
    }
    better_.push_back(std::move(better));
  }
  if (settings_.max_iterations < 1 || settings_.patience < 1 || !(settings_.tolerance >= 0.0) ||
      !(settings_.step_scale >= 0.0) || !(settings_.relative_gap > 0.0)) {
    throw std::invalid_argument("allocation problem: invalid ascent settings");
  }
}

double row_value(const Allocation& alpha, const AllocProblem& problem, std::size_t q_position) {
  const std::size_t x = problem.q_members()[q_position];
  const PairRateModel& rates = problem.rates();
  double sum = 0.0;
  for (std::size_t y : problem.better_points(q_position)) {
    sum += rates.value(x, y, alpha[x], alpha[y]);
  }
  return sum;
}

ObjectiveValue evaluate_objective(const Allocation& alpha, const AllocProblem& problem) {
  if (alpha.size() != problem.size()) {
    throw std::invalid_argument("objective: allocation has the wrong dimension");
  }
  ObjectiveValue out{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t q = 0; q < problem.q_members().size(); ++q) {
    const double v = row_value(alpha, problem, q);
    if (v < out.value) {
      out.value = v;
      out.active = q;
    }
  }
  return out;
}

double objective(const Allocation& alpha, const AllocProblem& problem) {
  return evaluate_objective(alpha, problem).value;
}

std::vector<double> row_gradient(const Allocation& alpha, const AllocProblem& problem,
                                 std::size_t q_position) {
  const std::size_t x = problem.q_members()[q_position];
  const PairRateModel& rates = problem.rates();
  std::vector<double> grad(problem.size(), 0.0);
  for (std::size_t y : problem.better_points(q_position)) {
    const PairTerm term = rates.evaluate(x, y, alpha[x], alpha[y]);
    grad[x] += term.d_alpha_x;
    grad[y] += term.d_alpha_y;
  }
  return grad;
}

std::vector<double> supergradient(const Allocation& alpha, const AllocProblem& problem) {
  return row_gradient(alpha, problem, evaluate_objective(alpha, problem).active);
}

namespace {

OptimizeResult supergradient_ascent(const AllocProblem& problem, Allocation current) {
  const std::size_t d = problem.size();
  const AscentSettings& s = problem.settings();
  ObjectiveValue eval = evaluate_objective(current, problem);
  OptimizeResult out{current, eval.value, 0, false, {eval.value}};
  out.best_trace.reserve(static_cast<std::size_t>(s.max_iterations) + 1);

  double scale = s.step_scale;
  std::vector<double> next(d);
  for (int k = 1; k <= s.max_iterations; ++k) {
    const std::vector<double> grad = row_gradient(current, problem, eval.active);
    if (scale == 0.0) {
      // Size the schedule from the first tangential supergradient.
      const double mean = std::accumulate(grad.begin(), grad.end(), 0.0) / static_cast<double>(d);
      double norm = 0.0;
      for (double g : grad) norm += (g - mean) * (g - mean);
      norm = std::sqrt(norm);
      scale = norm > 0.0 ? 0.1 / norm : 0.1;
    }
    const double step = scale / std::sqrt(static_cast<double>(k));
    for (std::size_t i = 0; i < d; ++i) next[i] = current[i] + step * grad[i];
    current = Allocation::projected(next, problem.alpha_min());
    eval = evaluate_objective(current, problem);
    if (eval.value > out.objective) {
      out.objective = eval.value;
      out.alpha = current;
    }
    out.iterations = k;
    out.best_trace.push_back(out.objective);
    if (k >= s.patience &&
        out.objective - out.best_trace[static_cast<std::size_t>(k - s.patience)] < s.tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// Epigraph form in scaled units: maximize z + mu sum_x log(g_x / scale - z)
// + mu sum_i log(alpha_i - alpha_min) subject to sum alpha = 1.
class BarrierSolver {
 public:
  BarrierSolver(const AllocProblem& problem, double scale)
      : p_(problem), d_(problem.size()), rows_(problem.q_members().size()), scale_(scale) {}

  // Row values in scaled units; nullopt when a pair evaluation fails.
  std::optional<std::vector<double>> row_values(const std::vector<double>& alpha) const {
    std::vector<double> g(rows_, 0.0);
    const PairRateModel& rates = p_.rates();
    try {
      for (std::size_t q = 0; q < rows_; ++q) {
        const std::size_t x = p_.q_members()[q];
        for (std::size_t y : p_.better_points(q)) g[q] += rates.value(x, y, alpha[x], alpha[y]);
        g[q] /= scale_;
        if (!std::isfinite(g[q])) return std::nullopt;
      }
    } catch (const std::runtime_error&) {
      return std::nullopt;
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
    return g;
  }

  // Barrier objective; -inf outside the domain.
  double merit(const std::vector<double>& alpha, double z, double mu,
               const std::vector<double>& g) const {
    double v = z;
    for (double gx : g) {
      if (!(gx - z > 0.0)) return -std::numeric_limits<double>::infinity();
      v += mu * std::log(gx - z);
    }
    for (double a : alpha) {
      if (!(a - p_.alpha_min() > 0.0)) return -std::numeric_limits<double>::infinity();
      v += mu * std::log(a - p_.alpha_min());
    }
    return v;
  }

  // Newton direction for the barrier problem at row values `g`. Returns the
  // decrement grad . step, positive for an ascent direction, or NaN when the
  // system cannot be formed.
  double newton_step(const std::vector<double>& alpha, double z, double mu,
                     const std::vector<double>& g, Eigen::VectorXd& step) const {
    const std::size_t n = d_ + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    const PairRateModel& rates = p_.rates();
    std::vector<double> row_grad(d_);
    std::vector<std::size_t> touched;
    const auto zi = static_cast<Eigen::Index>(d_);

    for (std::size_t q = 0; q < rows_; ++q) {
      const std::size_t x = p_.q_members()[q];
      const auto better = p_.better_points(q);
      std::fill(row_grad.begin(), row_grad.end(), 0.0);
      terms_.clear();
      for (std::size_t y : better) {
        PairTerm t = rates.evaluate(x, y, alpha[x], alpha[y]);
        row_grad[x] += t.d_alpha_x / scale_;
        row_grad[y] += t.d_alpha_y / scale_;
        terms_.push_back(t);
      }
      const double slack = g[q] - z;
      const double w1 = mu / slack;
      const double w2 = mu / (slack * slack);
      touched.assign(better.begin(), better.end());
      touched.push_back(x);
      for (std::size_t k = 0; k < better.size(); ++k) {
        const auto xi = static_cast<Eigen::Index>(x);
        const auto yi = static_cast<Eigen::Index>(better[k]);
        const PairTerm& t = terms_[k];
        h(xi, xi) += w1 * t.h_xx / scale_;
        h(yi, yi) += w1 * t.h_yy / scale_;
        h(xi, yi) += w1 * t.h_xy / scale_;
        h(yi, xi) += w1 * t.h_xy / scale_;
      }
      for (std::size_t i : touched) {
        const auto ii = static_cast<Eigen::Index>(i);
        grad(ii) += w1 * row_grad[i];
        h(ii, zi) += w2 * row_grad[i];
        h(zi, ii) += w2 * row_grad[i];
        for (std::size_t j : touched) {
          h(ii, static_cast<Eigen::Index>(j)) -= w2 * row_grad[i] * row_grad[j];
        }
      }
      grad(zi) -= w1;
      h(zi, zi) -= w2;
    }
    grad(zi) += 1.0;
    for (std::size_t i = 0; i < d_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double slack = alpha[i] - p_.alpha_min();
      grad(ii) += mu / slack;
      h(ii, ii) -= mu / (slack * slack);
    }

    // KKT system with the equality constraint sum(delta alpha) = 0.
    const auto m = static_cast<Eigen::Index>(n + 1);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m, m);
    kkt.topLeftCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = h;
    for (std::size_t i = 0; i < d_; ++i) {
      kkt(static_cast<Eigen::Index>(i), m - 1) = 1.0;
      kkt(m - 1, static_cast<Eigen::Index>(i)) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs.head(static_cast<Eigen::Index>(n)) = -grad;
    if (!kkt.allFinite() || !rhs.allFinite()) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);
    step = sol.head(static_cast<Eigen::Index>(n));
    double dec = grad.dot(step);
    if (!step.allFinite() || !(dec > 0.0)) {
      // Fall back to the projected gradient.
      step = grad;
      const double mean = grad.head(zi).mean();
      step.head(zi).array() -= mean;
      dec = grad.dot(step);
    }
    return dec;
  }

 private:
  const AllocProblem& p_;
  std::size_t d_;
  std::size_t rows_;
  double scale_;
  mutable std::vector<PairTerm> terms_;
};

OptimizeResult barrier_newton(const AllocProblem& problem, Allocation start) {
  const std::size_t d = problem.size();
  const AscentSettings& s = problem.settings();
  const double amin = problem.alpha_min();

  ObjectiveValue eval = evaluate_objective(start, problem);
  OptimizeResult out{start, eval.value, 0, false, {eval.value}};

  // Pair rates increase in both allocations, so the row sums at alpha = 1
  // bound the optimum from above.
  double scale = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < problem.q_members().size(); ++q) {
    const std::size_t x = problem.q_members()[q];
    double sum = 0.0;
    for (std::size_t y : problem.better_points(q)) sum += problem.rates().value(x, y, 1.0, 1.0);
    scale = std::min(scale, sum);
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = std::max(eval.value, 1.0);
  BarrierSolver solver(problem, scale);

  // Strictly interior start.
  std::vector<double> alpha(start.weights().begin(), start.weights().end());
  const double margin = 1e-3 * (1.0 / static_cast<double>(d) - amin);
  if (*std::min_element(alpha.begin(), alpha.end()) - amin < margin) {
    const double lam = 1e-2;
    for (double& a : alpha) a = (1.0 - lam) * a + lam / static_cast<double>(d);
  }
  std::optional<std::vector<double>> g = solver.row_values(alpha);
  if (!g) return supergradient_ascent(problem, start);
  double z = *std::min_element(g->begin(), g->end()) - 1.0;

  const double constraints = static_cast<double>(problem.q_members().size() + d);
  double mu = 1.0 / constraints;
  Eigen::VectorXd step;
  std::vector<double> trial(d);
  int newton_steps = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<double> best_alpha;
  bool budget_left = true;
  bool stalled = false;
  while (budget_left) {
    for (int inner = 0; inner < 100; ++inner) {
      if (newton_steps >= s.max_iterations) {
        budget_left = false;
        break;
      }
      const double dec = solver.newton_step(alpha, z, mu, *g, step);
      if (!std::isfinite(dec) || !step.allFinite()) {
        budget_left = false;
        stalled = true;
        break;
      }
      if (dec / 2.0 <= std::max(1e-14, 1e-3 * mu)) break;
      const double base = solver.merit(alpha, z, mu, *g);
      double t = 1.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double di = step(static_cast<Eigen::Index>(i));
        if (di < 0.0) t = std::min(t, 0.99 * (alpha[i] - amin) / -di);
      }
      bool accepted = false;
      for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
        for (std::size_t i = 0; i < d; ++i) trial[i] = alpha[i] + t * step(static_cast<Eigen::Index>(i));
        if (*std::min_element(trial.begin(), trial.end()) <= amin) continue;
        const double zt = z + t * step(static_cast<Eigen::Index>(d));
        std::optional<std::vector<double>> gt = solver.row_values(trial);
        if (!gt) continue;
        const double v = solver.merit(trial, zt, mu, *gt);
        if (v >= base + 0.25 * t * dec) {
          alpha = trial;
          z = zt;
          g = std::move(gt);
          accepted = true;
          break;
        }
      }
      ++newton_steps;
      if (accepted) {
        const double value = *std::min_element(g->begin(), g->end()) * scale;
        if (value > best_value) {
          best_value = value;
          best_alpha = alpha;
        }
      }
      out.best_trace.push_back(std::max(out.best_trace.front(), best_value));
      if (!accepted) break;
    }
    if (stalled) break;
    if (mu * constraints <= s.relative_gap) {
      out.converged = true;
      break;
    }
    mu *= 0.05;
  }
  out.iterations = newton_steps;
  if (!best_alpha.empty()) {
    const Allocation candidate = Allocation::projected(best_alpha, amin);
    const double value = objective(candidate, problem);
    if (value >= out.objective) {
      out.alpha = candidate;
      out.objective = value;
    }
  }
  // The trace reports row minima before the final projection; keep it
  // consistent with the returned objective.
  for (double& v : out.best_trace) v = std::min(v, out.objective);
  return out;
}

}  // namespace

OptimizeResult optimize(const AllocProblem& problem, const std::optional<Allocation>& start) {
  const std::size_t d = problem.size();
  Allocation current = start ? Allocation::projected(start->weights(), problem.alpha_min())
                             : Allocation::uniform(d, problem.alpha_min());
  if (current.size() != d) throw std::invalid_argument("optimize: start has the wrong dimension");
  if (problem.settings().method == AscentMethod::supergradient) {
    return supergradient_ascent(problem, std::move(current));
  }
  return barrier_newton(problem, std::move(current));
}

Allocation brute_force_oracle(const AllocProblem& problem, double resolution) {
  const std::size_t d = problem.size();
  if (d > 4) throw std::invalid_argument("brute_force_oracle supports at most 4 design points");
  if (!(resolution > 0.0) || resolution > 0.5) {
    throw std::invalid_argument("brute_force_oracle: resolution must be in (0, 0.5]");
  }
  const int steps = static_cast<int>(std::lround(1.0 / resolution));
  const double h = 1.0 / steps;

  std::vector<int> counts(d, 0);
  std::vector<double> point(d);
  std::optional<Allocation> best;
  double best_value = -std::numeric_limits<double>::infinity();

  // Enumerate compositions of `steps` into d nonnegative parts.
  auto visit = [&](auto&& self, std::size_t i, int remaining) -> void {
    if (i + 1 == d) {
      counts[i] = remaining;
      for (std::size_t j = 0; j < d; ++j) point[j] = counts[j] * h;
      Allocation candidate = Allocation::projected(point, problem.alpha_min());
      const double v = objective(candidate, problem);
      if (v > best_value) {
        best_value = v;
        best = std::move(candidate);
      }
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[i] = c;
      self(self, i + 1, remaining - c);
    }
  };
  visit(visit, 0, steps);
  return *best;
}

}  // namespace saa
