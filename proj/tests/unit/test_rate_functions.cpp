#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "saa/cgf.hpp"
#include "saa/loss_models.hpp"
#include "saa/rate_functions.hpp"
#include "saa/scalar_max.hpp"

using namespace saa;
using Catch::Approx;

TEST_CASE("Gaussian closed form", "[rate]") {
  const RateResult r = pair_rate_gaussian(0.0, 0.0, 1.0, 1.0, 1.0, 0.5, 0.5);
  CHECK(r.value == Approx(0.125));
  CHECK(r.t_star == Approx(-0.25));
  CHECK(pair_rate_gaussian(1.0, 0.0, 1.0, 1.0, 1.0, 0.5, 0.5).value == 0.0);
  CHECK(pair_rate_gaussian(0.1, 0.0, 0.0, 1.0, 1.0, 0.5, 0.5).value == Approx(0.00125));
  CHECK_THROWS_AS(pair_rate_gaussian(0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(pair_rate_gaussian(0.0, 0.0, 1.0, -1.0, 1.0, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("binomial exponent and value", "[rate]") {
  const RateResult r = pair_rate_binomial(6.0, 4.0, 10, 0.5, 0.5);
  CHECK(r.t_star == Approx(0.202733).margin(1e-6));
  CHECK(r.t_star == Approx(std::log(2.25) / 4.0).epsilon(1e-14));
  const BinomialCgf cx(0.6, 10), cy(0.4, 10);
  const RateResult n = pair_rate_numeric(0.0, 0.5, 0.5, cx, cy);
  CHECK(n.value == Approx(r.value).margin(1e-10));
  CHECK(n.t_star == Approx(r.t_star).margin(1e-8));
  CHECK(pair_rate_binomial(5.0, 5.0, 10, 0.3, 0.7).value == Approx(0.0).margin(1e-15));
  CHECK_THROWS_AS(pair_rate_binomial(0.0, 4.0, 10, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(pair_rate_binomial(6.0, 10.0, 10, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("numeric transform agrees with the Gaussian closed form", "[rate]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> mean(-3.0, 3.0), var(0.1, 4.0), alpha(0.01, 0.99),
      gamma(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double fx = mean(rng), fy = mean(rng), vx = var(rng), vy = var(rng);
    const double ax = alpha(rng), ay = alpha(rng) * (1.0 - ax), g = gamma(rng);
    const RateResult c = pair_rate_gaussian(g, fx, fy, vx, vy, ax, ay);
    const RateResult n = pair_rate_numeric(g, ax, ay, GaussianCgf(fx, vx), GaussianCgf(fy, vy));
    REQUIRE(n.value == Approx(c.value).margin(1e-9));
    REQUIRE(n.t_star == Approx(c.t_star).margin(1e-6));
  }
}

TEST_CASE("rate vanishes at gamma equal to the mean difference", "[rate]") {
  const SquaredGaussianCgf cx(1.0, 1.0), cy(0.5, 1.0);
  const double dfy_minus_fx = (0.25 + 1.0) - (1.0 + 1.0);
  const RateResult r = pair_rate_numeric(dfy_minus_fx, 0.4, 0.6, cx, cy);
  CHECK(r.value == Approx(0.0).margin(1e-12));
  CHECK(r.t_star == Approx(0.0).margin(1e-6));
}

TEST_CASE("numeric transform respects a finite CGF domain", "[rate]") {
  const SquaredGaussianCgf cx(2.0, 1.0), cy(0.0, 1.0);
  const RateResult r = pair_rate_numeric(0.0, 0.5, 0.5, cx, cy);
  CHECK(r.converged);
  CHECK(r.value > 0.0);
  CHECK(r.t_star > 0.0);
  CHECK(r.t_star / 0.5 < 0.5);
  // Value is the supremum: nearby exponents do no better.
  for (double dt : {-1e-3, 1e-3}) {
    CHECK(-phi(r.t_star + dt, 0.5, 0.5, cx, cy) <= r.value + 1e-12);
  }
}

TEST_CASE("rate is jointly concave and increasing in the allocation", "[rate]") {
  const double a1 = 0.2, b1 = 0.3, a2 = 0.5, b2 = 0.1;
  const auto I = [](double ax, double ay) {
    return pair_rate_gaussian(0.0, 2.0, 0.0, 1.0, 3.0, ax, ay).value;
  };
  CHECK(I(0.5 * (a1 + a2), 0.5 * (b1 + b2)) >= 0.5 * (I(a1, b1) + I(a2, b2)) - 1e-15);
  CHECK(I(0.3, 0.3) > I(0.2, 0.3));
  CHECK(I(0.3, 0.4) > I(0.3, 0.3));
}

TEST_CASE("misorder rate is zero on typical events", "[rate]") {
  const GaussianCgf cx(0.0, 1.0), cy(0.5, 1.0);
  PairInputs p{0.0, 0.5, 0.5, 0.5, &cx, &cy};
  CHECK(misorder_rate(0.4, p) == 0.0);
  CHECK(misorder_rate(1.0, p) == Approx(0.25 / 8.0));
  CHECK_THROWS_AS(misorder_rate(0.0, p), std::invalid_argument);
}

TEST_CASE("Q set uses a strict threshold", "[rate]") {
  const std::vector<double> f{0.0, 0.5, 1.0, 2.0};
  const QSet q = q_set(f, 0.0, 0.5);
  CHECK(q.members == std::vector<std::size_t>{2, 3});
  CHECK(q.delta == Approx(0.5));
  CHECK(q_set(f, 0.0, 5.0).members.empty());
  CHECK_THROWS_AS(q_set(f, -1.0, 0.5), std::invalid_argument);
}

TEST_CASE("regret rate picks the weakest Q member", "[rate]") {
  const LossModel m(GaussianLoss{{0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}});
  const std::vector<double> f = m.means();
  const Allocation a = Allocation::uniform(3);
  const double j = regret_rate(m, f, 0.0, 0.5, a, RateBackend::closed_form);
  const double third = 1.0 / 3.0;
  const double i10 = pair_rate_gaussian(0.0, 1.0, 0.0, 1.0, 1.0, third, third).value;
  const double i20 = pair_rate_gaussian(0.0, 2.0, 0.0, 1.0, 1.0, third, third).value;
  const double i21 = pair_rate_gaussian(0.0, 2.0, 1.0, 1.0, 1.0, third, third).value;
  CHECK(j == Approx(std::min(i10, i20 + i21)));
  CHECK(regret_rate(m, f, 0.0, 0.5, a, RateBackend::numeric) == Approx(j).margin(1e-9));
  CHECK_THROWS_AS(regret_rate(m, f, 0.0, 5.0, a, RateBackend::closed_form), std::domain_error);
}

TEST_CASE("golden section maximizer", "[scalar]") {
  ConcaveFunction fn;
  fn.value = [](double t) { return -(t - 3.0) * (t - 3.0) + 1.0; };
  const ScalarMaxResult r = maximize_concave(fn, Interval{});
  CHECK(r.arg == Approx(3.0).margin(1e-6));
  CHECK(r.value == Approx(1.0));
  CHECK(r.converged);

  fn.derivatives = [](double t) { return std::pair{-2.0 * (t - 3.0), -2.0}; };
  CHECK(maximize_concave(fn, Interval{}).arg == Approx(3.0).margin(1e-12));

  ConcaveFunction edge;
  edge.value = [](double t) { return t; };
  const ScalarMaxResult b = maximize_concave(edge, Interval{-1.0, 2.0});
  CHECK_FALSE(b.converged);
  CHECK(b.arg == Approx(2.0).margin(1e-6));
}

TEST_CASE("separated empirical samples give an unbounded transform", "[rate]") {
  const EmpiricalCgf cx(std::vector<double>{5.0, 6.0}), cy(std::vector<double>{0.0, 1.0});
  RateResult r;
  REQUIRE_NOTHROW(r = pair_rate_numeric(0.0, 1.0 / 46, 1.0 / 46, cx, cy));
  CHECK_FALSE(r.converged);
  const RateResult bounded = pair_rate_numeric(0.0, 1.0 / 46, 1.0 / 46, cx, cy, Interval{-1.0, 1.0});
  CHECK(std::isfinite(bounded.value));
}
