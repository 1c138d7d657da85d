#include <catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <random>

#include "saa/alloc_opt.hpp"
#include "saa/allocation.hpp"
#include "saa/cgf.hpp"
#include "saa/rate_functions.hpp"

using namespace saa;
using Catch::Approx;

namespace {

std::shared_ptr<const PairRateModel> gaussian(std::vector<double> f, std::vector<double> v) {
  return std::make_shared<GaussianPairRates>(std::move(f), std::move(v));
}

void check_term_derivatives(const PairRateModel& r, std::size_t x, std::size_t y, double ax,
                            double ay, double rel) {
  const double h = 1e-5;
  const PairTerm t = r.evaluate(x, y, ax, ay);
  const double gx = (r.value(x, y, ax + h, ay) - r.value(x, y, ax - h, ay)) / (2 * h);
  const double gy = (r.value(x, y, ax, ay + h) - r.value(x, y, ax, ay - h)) / (2 * h);
  CHECK(t.value == Approx(r.value(x, y, ax, ay)).epsilon(1e-10));
  CHECK(t.d_alpha_x == Approx(gx).epsilon(rel).margin(1e-9));
  CHECK(t.d_alpha_y == Approx(gy).epsilon(rel).margin(1e-9));
  const PairTerm px = r.evaluate(x, y, ax + h, ay), mx = r.evaluate(x, y, ax - h, ay);
  const PairTerm py = r.evaluate(x, y, ax, ay + h), my = r.evaluate(x, y, ax, ay - h);
  CHECK(t.h_xx == Approx((px.d_alpha_x - mx.d_alpha_x) / (2 * h)).epsilon(1e-3).margin(1e-7));
  CHECK(t.h_yy == Approx((py.d_alpha_y - my.d_alpha_y) / (2 * h)).epsilon(1e-3).margin(1e-7));
  CHECK(t.h_xy == Approx((py.d_alpha_x - my.d_alpha_x) / (2 * h)).epsilon(1e-3).margin(1e-7));
  // Concave pair terms have a negative semidefinite Hessian.
  CHECK(t.h_xx <= 1e-12);
  CHECK(t.h_yy <= 1e-12);
  CHECK(t.h_xx * t.h_yy - t.h_xy * t.h_xy >= -1e-9 * (std::abs(t.h_xx * t.h_yy) + 1e-12));
}

}  // namespace

TEST_CASE("allocation invariants and projection", "[allocation]") {
  const Allocation u = Allocation::uniform(4);
  CHECK(u[2] == 0.25);
  CHECK_THROWS_AS(Allocation({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(Allocation({1.0, 0.0}), std::invalid_argument);
  CHECK_NOTHROW(Allocation({1.0, 0.0}, 0.0));
  const Allocation p = Allocation::projected(std::vector<double>{2.0, -1.0, 0.5});
  double s = 0.0;
  for (double w : p.weights()) {
    s += w;
    CHECK(w >= kDefaultAlphaMin);
  }
  CHECK(s == Approx(1.0).margin(1e-12));
  CHECK(p[0] > p[2]);
  const auto q = project_to_simplex(std::vector<double>{0.2, 0.3, 0.5}, 0.0);
  CHECK(q[1] == Approx(0.3));
}

TEST_CASE("pair term derivatives match finite differences", "[alloc]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> a(0.05, 0.45);
  const GaussianPairRates g({2.0, 0.5}, {1.5, 0.7});
  const BinomialPairRates b({7.0, 3.0}, 10);
  const NumericPairRates n({std::make_shared<SquaredGaussianCgf>(1.5, 1.0),
                            std::make_shared<SquaredGaussianCgf>(0.2, 1.0)});
  for (int k = 0; k < 10; ++k) {
    const double ax = a(rng), ay = a(rng);
    check_term_derivatives(g, 0, 1, ax, ay, 1e-6);
    check_term_derivatives(b, 0, 1, ax, ay, 1e-6);
    check_term_derivatives(n, 0, 1, ax, ay, 1e-5);
  }
}

TEST_CASE("frozen-exponent terms are exact and concave", "[alloc]") {
  std::vector<std::shared_ptr<const Cgf>> cgfs{std::make_shared<SquaredGaussianCgf>(1.5, 1.0),
                                               std::make_shared<SquaredGaussianCgf>(0.2, 1.0)};
  const FrozenExponentRates fr(cgfs, {0.0, 0.1, 0.0, 0.0});
  CHECK(fr.exponent(0, 1) == 0.1);
  check_term_derivatives(fr, 0, 1, 0.3, 0.4, 1e-6);
  // Any frozen exponent bounds the full rate from below, with equality at t*.
  const NumericPairRates full(cgfs);
  const double exact = full.value(0, 1, 0.3, 0.4);
  CHECK(fr.value(0, 1, 0.3, 0.4) <= exact + 1e-12);
  const double t_star = pair_rate_numeric(0.0, 0.3, 0.4, *cgfs[0], *cgfs[1]).t_star;
  const FrozenExponentRates at_star(cgfs, {0.0, t_star, 0.0, 0.0});
  CHECK(at_star.value(0, 1, 0.3, 0.4) == Approx(exact).epsilon(1e-10));
}

TEST_CASE("two symmetric points split evenly", "[alloc]") {
  const AllocProblem p({1.0, 0.0}, {0}, gaussian({1.0, 0.0}, {1.0, 1.0}));
  const OptimizeResult r = optimize(p);
  CHECK(r.converged);
  CHECK(r.alpha[0] == Approx(0.5).margin(1e-6));
  CHECK(r.objective == Approx(0.125).epsilon(1e-9));
}

TEST_CASE("two points allocate in proportion to the standard deviations", "[alloc]") {
  const AllocProblem p({1.0, 0.0}, {0}, gaussian({1.0, 0.0}, {4.0, 1.0}));
  for (auto method : {AscentMethod::barrier_newton, AscentMethod::supergradient}) {
    AscentSettings s;
    s.method = method;
    const AllocProblem q({1.0, 0.0}, {0}, gaussian({1.0, 0.0}, {4.0, 1.0}), kDefaultAlphaMin, s);
    const OptimizeResult r = optimize(q);
    CHECK(r.alpha[0] == Approx(2.0 / 3.0).margin(method == AscentMethod::barrier_newton ? 1e-6 : 1e-3));
  }
  CHECK(objective(optimize(p).alpha, p) == Approx(1.0 / 18.0).epsilon(1e-9));
}

TEST_CASE("optimizer matches the lattice oracle on small problems", "[alloc]") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> mean(0.0, 2.0), var(0.2, 3.0);
  for (int k = 0; k < 10; ++k) {
    const std::size_t d = 3;
    std::vector<double> f(d), v(d);
    for (std::size_t i = 0; i < d; ++i) {
      f[i] = mean(rng);
      v[i] = var(rng);
    }
    const auto lo = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
    std::vector<std::size_t> q;
    for (std::size_t i = 0; i < d; ++i) {
      if (i != lo) q.push_back(i);
    }
    const AllocProblem p(f, q, gaussian(f, v));
    const double j = optimize(p).objective;
    const double oracle = objective(brute_force_oracle(p, 0.01), p);
    CHECK(j >= oracle - 1e-6);
  }
}

TEST_CASE("the optimum does not depend on the start", "[alloc]") {
  const std::vector<double> f{3.0, 1.0, 0.0, 0.5, 2.0};
  const AllocProblem p(f, {0, 1, 3, 4}, gaussian(f, {1.0, 2.0, 1.0, 0.5, 1.5}));
  const OptimizeResult a = optimize(p);
  const OptimizeResult b = optimize(p, Allocation({0.6, 0.1, 0.1, 0.1, 0.1}));
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(a.alpha[i] == Approx(b.alpha[i]).margin(1e-6));
  CHECK(a.objective == Approx(b.objective).epsilon(1e-10));
  for (std::size_t k = 1; k < a.best_trace.size(); ++k) {
    CHECK(a.best_trace[k] >= a.best_trace[k - 1]);
  }
  CHECK(a.best_trace.back() == Approx(a.objective));
}

TEST_CASE("objective is the minimum over Q of the row sums", "[alloc]") {
  const std::vector<double> f{2.0, 0.0, 1.0};
  const AllocProblem p(f, {0, 2}, gaussian(f, {1.0, 1.0, 1.0}));
  REQUIRE(p.better_points(0).size() == 2);
  REQUIRE(p.better_points(1).size() == 1);
  const Allocation a({0.2, 0.5, 0.3});
  const double r0 = row_value(a, p, 0), r1 = row_value(a, p, 1);
  const ObjectiveValue ov = evaluate_objective(a, p);
  CHECK(ov.value == std::min(r0, r1));
  CHECK(ov.active == (r0 <= r1 ? 0u : 1u));
  const auto g = supergradient(a, p);
  CHECK(g == row_gradient(a, p, ov.active));
}

TEST_CASE("problem validation", "[alloc]") {
  const auto r = gaussian({1.0, 0.0}, {1.0, 1.0});
  CHECK_THROWS_AS(AllocProblem({1.0, 0.0}, {}, r), std::invalid_argument);
  CHECK_THROWS_AS(AllocProblem({1.0, 0.0}, {5}, r), std::invalid_argument);
  CHECK_THROWS_AS(AllocProblem({1.0, 0.0}, {1}, r), std::invalid_argument);
  const std::vector<double> f(5, 1.0);
  std::vector<double> ff{1, 2, 3, 4, 0};
  const AllocProblem big(ff, {0, 1, 2, 3}, gaussian(ff, f));
  CHECK_THROWS_AS(brute_force_oracle(big, 0.1), std::invalid_argument);
}
