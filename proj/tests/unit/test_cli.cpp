#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("saa_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Run saa(const std::string& args) {
  const fs::path dir = fs::temp_directory_path();
  const fs::path out = dir / "saa_cli_stdout.txt", err = dir / "saa_cli_stderr.txt";
  const std::string cmd = std::string("\"") + SAA_CLI_PATH + "\" " + args + " >\"" + out.string() +
                          "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string config(const std::string& name) { return std::string(SAA_CONFIG_DIR) + "/" + name; }

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("rate prints the Gaussian value and cross-check", "[cli]") {
  const Run r = saa("rate --family gaussian --fx 0 --fy 1 --vx 1 --vy 1 --ax 0.5 --ay 0.5 --gamma 0");
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("value 0.125\n"));
  CHECK_THAT(r.out, ContainsSubstring("backend closed_form"));
  CHECK_THAT(r.out, ContainsSubstring("cross_check_delta"));
}

TEST_CASE("rate at gamma equal to the mean gap is zero", "[cli]") {
  const Run r = saa("rate --family gaussian --fx 0 --fy 1 --vx 1 --vy 1 --ax 0.5 --ay 0.5 --gamma 1");
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("value 0\n"));
}

TEST_CASE("rate prints the binomial exponent", "[cli]") {
  const Run r = saa("rate --family binomial --m 10 --fx 6 --fy 4 --ax 0.5 --ay 0.5");
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("t_star 0.202732"));
}

TEST_CASE("rate rejects invalid parameters", "[cli]") {
  CHECK(saa("rate --family gaussian --fx 0 --fy 1 --vx -1 --vy 1 --ax 0.5 --ay 0.5").code == 1);
  const Run missing = saa("rate --family gaussian --fx 0 --fy 1 --vx 1 --vy 1 --ax 0.5");
  CHECK(missing.code == 1);
  CHECK_THAT(missing.err, ContainsSubstring("rate.ay"));
  CHECK(saa("rate --family poisson --fx 0 --fy 1 --ax 0.5 --ay 0.5").code == 1);
}

TEST_CASE("optimize solves the two-point configs", "[cli]") {
  const fs::path dir = scratch("opt");
  const Run sym = saa("optimize --config " + config("two_point.json") + " --out " + dir.string());
  REQUIRE(sym.code == 0);
  CHECK_THAT(sym.out, ContainsSubstring("alpha 0.5 0.5\n"));
  CHECK(fs::exists(dir / "allocation.csv"));
  const Run sigma = saa("optimize --config " + config("sigma_1_2.json") + " --out " + dir.string());
  REQUIRE(sigma.code == 0);
  CHECK_THAT(sigma.out, ContainsSubstring("alpha 0.33333333"));
}

TEST_CASE("optimize --verify compares with the oracle", "[cli]") {
  const fs::path dir = scratch("verify");
  const Run r = saa("optimize --config " + config("three_point.json") + " --verify --out " + dir.string());
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("oracle_J"));
  CHECK_THAT(r.out, ContainsSubstring("verify PASS"));
}

TEST_CASE("optimize with an empty Q is a runtime error", "[cli]") {
  const fs::path p = write_config("saa_cli_emptyq.json",
      R"({"delta": 5, "grid": {"points": [0, 1]}, "model": {"family": "gaussian", "means": [0, 1]}})");
  const Run r = saa("optimize --config " + p.string() + " --out " + scratch("emptyq").string());
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("Q is empty"));
}

TEST_CASE("algo1 with the same seed writes identical CSVs", "[cli]") {
  const fs::path a = scratch("algo1_a"), b = scratch("algo1_b"), c = scratch("algo1_c");
  const std::string base = "algo1 --config " + config("two_point.json") + " --seed 7 --out ";
  REQUIRE(saa(base + a.string()).code == 0);
  REQUIRE(saa(base + b.string()).code == 0);
  for (const char* f : {"trace.csv", "allocation.csv"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const std::string trace = slurp(a / "trace.csv");
  CHECK(trace.rfind("iteration,total_samples,optimality_gap,alpha_0,alpha_1\n", 0) == 0);
  REQUIRE(saa("algo1 --config " + config("two_point.json") + " --seed 8 --out " + c.string()).code == 0);
  CHECK(slurp(a / "trace.csv") != slurp(c / "trace.csv"));
}

TEST_CASE("algo2 writes a trace", "[cli]") {
  const fs::path dir = scratch("algo2");
  const Run r = saa("algo2 --config " + config("two_point.json") + " --out " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "trace.csv"));
  CHECK_THAT(r.out, ContainsSubstring("converged"));
}

TEST_CASE("experiment emits the three harness CSVs", "[cli]") {
  const fs::path dir = scratch("experiment");
  const Run r = saa("experiment --config " + config("gaussian_algo1_delta1.json") +
                    " --replications 2 --out " + dir.string());
  REQUIRE(r.code == 0);
  for (const char* f : {"allocation.csv", "og_quantiles.csv", "ldp.csv"}) {
    CHECK(fs::exists(dir / f));
  }
}

TEST_CASE("ldp command prints the ladder", "[cli]") {
  const fs::path dir = scratch("ldp");
  const Run r = saa("ldp --config " + config("ldp_gaussian.json") + " --out " + dir.string());
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("1000000 "));
  CHECK(fs::exists(dir / "ldp.csv"));
}

TEST_CASE("missing config key exits 1 naming the key", "[cli]") {
  const fs::path p = write_config("saa_cli_missing.json",
      R"({"delta": 1, "grid": {"count": 5}, "model": {"family": "gaussian"}})");
  const Run r = saa("algo1 --config " + p.string());
  CHECK(r.code == 1);
  CHECK_THAT(r.err, ContainsSubstring("algo1.total_budget"));
}

TEST_CASE("unknown config key exits 1", "[cli]") {
  const fs::path p = write_config("saa_cli_unknown.json", R"({"delta": 1, "colour": 2})");
  const Run r = saa("optimize --config " + p.string());
  CHECK(r.code == 1);
  CHECK_THAT(r.err, ContainsSubstring("unknown key 'colour'"));
}

TEST_CASE("unwritable output is a runtime error", "[cli]") {
  const fs::path blocker = scratch("blocked") / "file";
  std::ofstream(blocker) << "x";
  const Run r = saa("optimize --config " + config("two_point.json") + " --out " + (blocker / "sub").string());
  CHECK(r.code == 2);
}

TEST_CASE("help lists every subcommand and global flag", "[cli]") {
  const Run r = saa("--help");
  CHECK(r.code == 0);
  for (const char* s : {"rate", "optimize", "algo1", "algo2", "experiment", "ldp", "--config",
                        "--seed", "--out", "--verify"}) {
    CHECK_THAT(r.out, ContainsSubstring(s));
  }
  const Run rate = saa("rate --help");
  for (const char* s : {"--family", "--fx", "--fy", "--vx", "--vy", "--ax", "--ay", "--gamma", "--m"}) {
    CHECK_THAT(rate.out, ContainsSubstring(s));
  }
}

TEST_CASE("flags override the configuration file", "[cli]") {
  const fs::path a = scratch("seed_flag"), b = scratch("seed_file");
  const fs::path p = write_config("saa_cli_seeded.json", slurp(config("two_point.json")));
  REQUIRE(saa("algo1 --config " + p.string() + " --seed 7 --out " + a.string()).code == 0);
  REQUIRE(saa("algo1 --config " + p.string() + " --seed 99 --out " + b.string()).code == 0);
  CHECK(slurp(a / "trace.csv") != slurp(b / "trace.csv"));
}
