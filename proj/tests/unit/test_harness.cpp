#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "saa/harness.hpp"

using namespace saa;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("saa_harness_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_algo1() {
  ExperimentConfig c;
  c.scenario = Scenario::gaussian_algo1;
  c.grid.lo = -1.0;
  c.grid.hi = 1.0;
  c.grid.count = 9;
  c.delta = 0.3;
  c.algo1.pilot = 5;
  c.algo1.per_iteration = 90;
  c.algo1.total_budget = 900;
  c.replications = 6;
  c.ldp.n_ladder = {100, 1000};
  return c;
}

}  // namespace

TEST_CASE("scenario and family names round-trip", "[harness]") {
  for (auto s : {Scenario::gaussian_algo1, Scenario::binomial_algo1, Scenario::squared_algo2,
                 Scenario::ldp_validate}) {
    CHECK(parse_scenario(to_string(s)) == s);
  }
  CHECK_FALSE(parse_scenario("figure"));
  CHECK(parse_family("squared_error") == ModelFamily::squared_error);
}

TEST_CASE("model spec defaults to a quadratic objective", "[harness]") {
  ModelSpec m;
  const DesignGrid g = GridSpec{}.build();
  REQUIRE(g.size() == 46);
  const auto f = m.objective(g);
  CHECK(f[0] == Approx(2.25 * 2.25));
  m.family = ModelFamily::squared_error;
  CHECK(m.objective(g)[0] == Approx(2.25 * 2.25 + 1.0));
}

TEST_CASE("log normal tail", "[harness]") {
  for (double z : {-3.0, 0.0, 1.0, 4.0, 4.99, 5.01, 8.0}) {
    CHECK(log_normal_tail(z) == Approx(std::log(0.5 * std::erfc(z / std::sqrt(2.0)))).epsilon(1e-10));
  }
  // Far tail: log P ~ -z^2/2 - log(z sqrt(2 pi)).
  const double z = 1e3;
  CHECK(log_normal_tail(z) == Approx(-z * z / 2 - std::log(z * std::sqrt(2 * M_PI))).epsilon(1e-9));
  CHECK(std::isfinite(log_normal_tail(40.0)));
}

TEST_CASE("sample quantiles interpolate linearly", "[harness]") {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0, 5.0};
  CHECK(sample_quantile(v, 0.0) == 1.0);
  CHECK(sample_quantile(v, 0.5) == 3.0);
  CHECK(sample_quantile(v, 0.1) == Approx(1.4));
  CHECK(sample_quantile(v, 1.0) == 5.0);
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
}

TEST_CASE("exact-tail LDP converges to the rate from above", "[harness][ldp]") {
  const LossModel m(GaussianLoss{{0.0, 0.0}, {1.0, 1.0}});
  const std::vector<std::size_t> ladder{1000, 10000, 100000, 1000000};
  const auto rows = ldp_validate(m, 0, 1, 0.1, 0.5, 0.5, ladder);
  REQUIRE(rows.size() == 4);
  double previous = INFINITY;
  for (const auto& r : rows) {
    CHECK(r.exact);
    CHECK(r.analytic_rate == Approx(0.00125));
    const double err = std::abs(r.implied_rate - r.analytic_rate);
    CHECK(err < previous);
    previous = err;
  }
  CHECK(std::abs(rows.back().implied_rate - 0.00125) / 0.00125 < 0.01);
}

TEST_CASE("typical events have an implied rate tending to zero", "[harness][ldp]") {
  const LossModel m(GaussianLoss{{0.0, 1.0}, {1.0, 1.0}});
  const std::vector<std::size_t> ladder{10, 100, 1000};
  const auto rows = ldp_validate(m, 0, 1, 0.5, 0.5, 0.5, ladder);
  CHECK(rows.back().analytic_rate == 0.0);
  CHECK(rows[1].implied_rate < rows[0].implied_rate);
  CHECK(rows[2].implied_rate < rows[1].implied_rate);
  CHECK(rows[2].implied_rate < 1e-6);
}

TEST_CASE("Monte Carlo LDP flags rare and missing events", "[harness][ldp]") {
  const DesignGrid g({0.0, 2.0});
  const LossModel m = LossModel::squared_error(g, 0.0, 1.0);
  const std::vector<std::size_t> ladder{2, 200};
  const auto rows = ldp_validate(m, 1, 0, 0.0, 0.5, 0.5, ladder, {100000, 3});
  CHECK_FALSE(rows[0].exact);
  CHECK(rows[0].events > 10);
  CHECK_FALSE(rows[0].lower_bound);
  CHECK(rows[1].events == 0);
  CHECK(rows[1].lower_bound);
  CHECK(rows[1].few_events);
  CHECK(rows[1].implied_rate == Approx(-std::log(3.0 / 100000.0) / 200.0));
  const auto again = ldp_validate(m, 1, 0, 0.0, 0.5, 0.5, ladder, {100000, 3});
  CHECK(again[0].log_prob == rows[0].log_prob);
}

TEST_CASE("binomial Monte Carlo tracks the exact binomial tail", "[harness][ldp]") {
  const LossModel m(BinomialLoss{{6.0, 4.0}, 10});
  const std::vector<std::size_t> ladder{20};
  const auto rows = ldp_validate(m, 0, 1, 0.0, 0.5, 0.5, ladder, {200000, 1});
  // Ten draws at each point: P(mean_y >= mean_x) with sums Bin(100, 0.4) and Bin(100, 0.6).
  double p = 0.0;
  std::vector<double> px(101), py(101);
  for (int k = 0; k <= 100; ++k) {
    const double c = std::lgamma(101.0) - std::lgamma(k + 1.0) - std::lgamma(101.0 - k);
    px[k] = std::exp(c + k * std::log(0.6) + (100 - k) * std::log(0.4));
    py[k] = std::exp(c + k * std::log(0.4) + (100 - k) * std::log(0.6));
  }
  for (int a = 0; a <= 100; ++a) {
    for (int b = a; b <= 100; ++b) p += px[a] * py[b];
  }
  CHECK(std::exp(rows[0].log_prob) == Approx(p).epsilon(0.05));
}

TEST_CASE("validation rejects a scenario and model mismatch", "[harness]") {
  ExperimentConfig c = small_algo1();
  c.model.family = ModelFamily::binomial;
  CHECK_THROWS_WITH(c.validate(), Catch::Matchers::ContainsSubstring("model.family"));
  c = small_algo1();
  c.replications = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_algo1();
  c.algo1.total_budget = 10;
  CHECK_THROWS_WITH(c.validate(), Catch::Matchers::ContainsSubstring("algo1.total_budget"));
}

TEST_CASE("reference problem errors on an empty Q", "[harness]") {
  const LossModel m(GaussianLoss{{0.0, 1.0}, {1.0, 1.0}});
  CHECK_THROWS_AS(reference_problem(m, 5.0), std::domain_error);
  CHECK(reference_problem(m, 0.5).q_members().size() == 1);
}

TEST_CASE("single replication has equal quantiles", "[harness]") {
  ExperimentConfig c = small_algo1();
  c.replications = 1;
  const ExperimentSummary s = run_experiment(c);
  REQUIRE_FALSE(s.og_quantiles.empty());
  for (const auto& q : s.og_quantiles) {
    CHECK(q.q10 == q.q50);
    CHECK(q.q50 == q.q90);
  }
  CHECK(s.written_files.empty());
}

TEST_CASE("experiment writes reproducible CSVs", "[harness]") {
  ExperimentConfig c = small_algo1();
  const fs::path a = scratch("a"), b = scratch("b");
  c.output_dir = a.string();
  const ExperimentSummary s = run_experiment(c);
  c.output_dir = b.string();
  c.threads = 3;
  run_experiment(c);
  REQUIRE(s.written_files.size() == 3);
  for (const char* name : {"allocation.csv", "og_quantiles.csv", "ldp.csv"}) {
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }

  for (const auto& q : s.og_quantiles) {
    CHECK(q.q10 <= q.q50);
    CHECK(q.q50 <= q.q90);
  }
  for (std::size_t r = 0; r < s.replications.size(); ++r) CHECK(s.replications[r].seed == r);

  std::istringstream alloc(slurp(a / "allocation.csv"));
  std::string line;
  std::getline(alloc, line);
  CHECK(line == "index,x,true_alpha,mean_estimated_alpha");
  double ref = 0.0, est = 0.0;
  int rows = 0;
  while (std::getline(alloc, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(cells, cell, ',')) v.push_back(std::stod(cell));
    ref += v[2];
    est += v[3];
    ++rows;
  }
  CHECK(rows == 9);
  CHECK(ref == Approx(1.0).margin(1e-9));
  CHECK(est == Approx(1.0).margin(1e-9));
  CHECK(slurp(a / "og_quantiles.csv").rfind("iteration,cumulative_samples,q10,q50,q90\n", 0) == 0);
  CHECK(slurp(a / "ldp.csv").rfind("n,log_prob,implied_rate,analytic_rate\n", 0) == 0);
}

TEST_CASE("ldp-validate scenario writes only the LDP table", "[harness]") {
  ExperimentConfig c;
  c.scenario = Scenario::ldp_validate;
  c.grid.points = {0.0, 1.0};
  c.model.means = {0.0, 0.0};
  c.ldp.gamma = 0.1;
  c.output_dir = scratch("ldp").string();
  const ExperimentSummary s = run_experiment(c);
  CHECK_FALSE(s.reference);
  CHECK(s.written_files.size() == 1);
  CHECK(s.ldp.size() == 4);
}
