#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "saa/alloc_opt.hpp"
#include "saa/cgf.hpp"
#include "saa/config.hpp"
#include "saa/harness.hpp"
#include "saa/rate_functions.hpp"
#include "saa/sequential.hpp"

namespace {

using namespace saa;

constexpr int kConfigExit = 1;
constexpr int kRuntimeExit = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verify = false;
  std::optional<unsigned> threads;
  std::optional<std::size_t> replications;
  RateSpec rate;
};

RunConfig load(const Options& opt, Command command) {
  RunConfig cfg = opt.config_path.empty() ? RunConfig{} : load_config(opt.config_path);
  if (command != Command::rate && opt.config_path.empty()) {
    throw ConfigError("missing required option --config");
  }
  require_keys(cfg, command);
  ExperimentConfig& e = cfg.experiment;
  if (opt.seed) e.seed_base = *opt.seed;
  if (!opt.out.empty()) e.output_dir = opt.out;
  if (opt.verify) cfg.verify = true;
  if (opt.threads) e.threads = *opt.threads;
  if (opt.replications) e.replications = *opt.replications;
  RateSpec& r = cfg.rate;
  const RateSpec& f = opt.rate;
  if (f.family) r.family = f.family;
  if (f.fx) r.fx = f.fx;
  if (f.fy) r.fy = f.fy;
  if (f.vx) r.vx = f.vx;
  if (f.vy) r.vy = f.vy;
  if (f.ax) r.ax = f.ax;
  if (f.ay) r.ay = f.ay;
  if (f.gamma) r.gamma = f.gamma;
  if (f.m) r.m = f.m;
  return cfg;
}

std::filesystem::path output_dir(const ExperimentConfig& e) {
  std::filesystem::path dir = e.output_dir.empty() ? "." : e.output_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

template <class T>
T need(const std::optional<T>& v, const char* key, const char* flag) {
  if (!v) {
    throw ConfigError(std::string("missing required key 'rate.") + key + "' (or " + flag + ")");
  }
  return *v;
}

void print_alpha(const Allocation& a) {
  std::cout << "alpha";
  for (double w : a.weights()) std::cout << ' ' << format_number(w);
  std::cout << '\n';
}

int cmd_rate(const RunConfig& cfg) {
  const RateSpec& r = cfg.rate;
  const std::string family = r.family.value_or("gaussian");
  const double fx = need(r.fx, "fx", "--fx");
  const double fy = need(r.fy, "fy", "--fy");
  const double ax = need(r.ax, "ax", "--ax");
  const double ay = need(r.ay, "ay", "--ay");
  const double gamma = r.gamma.value_or(0.0);

  if (family == "gaussian") {
    const double vx = need(r.vx, "vx", "--vx");
    const double vy = need(r.vy, "vy", "--vy");
    const RateResult closed = pair_rate_gaussian(gamma, fx, fy, vx, vy, ax, ay);
    const GaussianCgf cx(fx, vx), cy(fy, vy);
    const RateResult numeric = pair_rate_numeric(gamma, ax, ay, cx, cy);
    std::cout << "value " << format_number(closed.value) << '\n'
              << "t_star " << format_number(closed.t_star) << '\n'
              << "backend closed_form\n"
              << "numeric_value " << format_number(numeric.value) << '\n'
              << "cross_check_delta " << format_number(std::abs(closed.value - numeric.value))
              << '\n';
    return 0;
  }
  if (family == "binomial") {
    const int m = need(r.m, "m", "--m");
    if (m < 1) throw ConfigError("'rate.m' must be positive");
    if (!(fx > 0.0 && fx < m && fy > 0.0 && fy < m)) {
      throw ConfigError("binomial means must lie strictly between 0 and m");
    }
    const BinomialCgf cx(fx / m, m), cy(fy / m, m);
    const RateResult numeric = pair_rate_numeric(gamma, ax, ay, cx, cy);
    if (gamma == 0.0) {
      const RateResult closed = pair_rate_binomial(fx, fy, m, ax, ay);
      std::cout << "value " << format_number(closed.value) << '\n'
                << "t_star " << format_number(closed.t_star) << '\n'
                << "backend closed_form\n"
                << "numeric_value " << format_number(numeric.value) << '\n'
                << "cross_check_delta " << format_number(std::abs(closed.value - numeric.value))
                << '\n';
    } else {
      std::cout << "value " << format_number(numeric.value) << '\n'
                << "t_star " << format_number(numeric.t_star) << '\n'
                << "backend numeric\n";
    }
    return 0;
  }
  throw ConfigError("'rate.family' must be gaussian or binomial");
}

int cmd_optimize(const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  const DesignGrid grid = e.grid.build();
  const LossModel model = e.model.build(grid);
  const AllocProblem problem = reference_problem(model, e.delta, e.alpha_min, e.ascent);
  const OptimizeResult res = optimize(problem);

  std::cout << "J " << format_number(res.objective) << '\n';
  print_alpha(res.alpha);
  std::cout << "iterations " << res.iterations << '\n';
  std::cout << "converged " << (res.converged ? "yes" : "no") << '\n';

  const auto path = (output_dir(e) / "allocation.csv").string();
  write_allocation_csv(path, grid.points(), res.alpha, res.alpha.weights());
  std::cout << "wrote " << path << '\n';

  if (cfg.verify) {
    if (grid.size() > 4) {
      std::cout << "verify skipped: the oracle needs d <= 4\n";
    } else {
      const Allocation oracle = brute_force_oracle(problem, 0.01);
      const double j_oracle = objective(oracle, problem);
      const bool ok = res.objective >= j_oracle - 1e-4;
      std::cout << "oracle_J " << format_number(j_oracle) << '\n'
                << "verify " << (ok ? "PASS" : "FAIL") << '\n';
      if (!ok) return kRuntimeExit;
    }
  }
  return 0;
}

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const std::size_t d = trace.records.front().alpha.size();
  out << "iteration,total_samples,optimality_gap";
  for (std::size_t i = 0; i < d; ++i) out << ",alpha_" << i;
  out << '\n';
  for (const auto& rec : trace.records) {
    out << rec.iteration << ',' << rec.total_samples() << ',';
    if (rec.optimality_gap) out << format_number(*rec.optimality_gap);
    for (double a : rec.alpha.weights()) out << ',' << format_number(a);
    out << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

int report_trace(const ExperimentConfig& e, const DesignGrid& grid, const Allocation& reference,
                 const RunTrace& trace) {
  for (const auto& ev : trace.events) std::cerr << "event: " << ev << '\n';
  const auto dir = output_dir(e);
  const auto trace_path = (dir / "trace.csv").string();
  const auto alloc_path = (dir / "allocation.csv").string();
  write_trace_csv(trace_path, trace);
  const IterationRecord& last = trace.records.back();
  write_allocation_csv(alloc_path, grid.points(), reference, last.alpha.weights());
  std::cout << "iterations " << trace.iterations() << '\n'
            << "total_samples " << last.total_samples() << '\n';
  if (last.optimality_gap) std::cout << "optimality_gap " << format_number(*last.optimality_gap) << '\n';
  print_alpha(last.alpha);
  std::cout << "wrote " << trace_path << '\n' << "wrote " << alloc_path << '\n';
  return 0;
}

int cmd_algo1(const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  const DesignGrid grid = e.grid.build();
  const LossModel model = e.model.build(grid);
  Algo1Config c = e.algo1;
  switch (e.model.family) {
    case ModelFamily::gaussian: c.family = RateFamily::gaussian; break;
    case ModelFamily::binomial: c.family = RateFamily::binomial; break;
    default: throw ConfigError("algo1 needs model.family gaussian or binomial");
  }
  c.delta = e.delta;
  c.seed = e.seed_base;
  c.alpha_min = e.alpha_min;
  c.ascent = e.ascent;
  const OptimizeResult ref = optimize(reference_problem(model, e.delta, e.alpha_min, e.ascent));
  return report_trace(e, grid, ref.alpha, algo1_run(grid, model, c, ref.alpha));
}

int cmd_algo2(const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  const DesignGrid grid = e.grid.build();
  const LossModel model = e.model.build(grid);
  Algo2Config c = e.algo2;
  c.delta = e.delta;
  c.seed = e.seed_base;
  c.alpha_min = e.alpha_min;
  c.ascent = e.ascent;
  const OptimizeResult ref = optimize(reference_problem(model, e.delta, e.alpha_min, e.ascent));
  const RunTrace trace = algo2_run(grid, model, c, ref.alpha);
  std::cout << "converged " << (trace.converged ? "yes" : "no") << '\n';
  return report_trace(e, grid, ref.alpha, trace);
}

void report_ldp(const ExperimentSummary& s) {
  std::cout << "ldp_pair " << s.ldp_x << ' ' << s.ldp_y << '\n';
  std::cout << "n log_prob implied_rate analytic_rate\n";
  for (const auto& row : s.ldp) {
    std::cout << row.n << ' ' << format_number(row.log_prob) << ' '
              << format_number(row.implied_rate) << ' ' << format_number(row.analytic_rate)
              << '\n';
    if (row.lower_bound) {
      std::cerr << "n=" << row.n << ": no Monte Carlo events; implied rate is a lower bound\n";
    } else if (row.few_events) {
      std::cerr << "n=" << row.n << ": only " << row.events << " Monte Carlo events\n";
    }
  }
}

void ensure_output(ExperimentConfig& e) {
  if (e.output_dir.empty()) e.output_dir = ".";
}

int cmd_experiment(RunConfig cfg) {
  ExperimentConfig& e = cfg.experiment;
  ensure_output(e);
  const ExperimentSummary s = run_experiment(e);
  std::cout << "scenario " << to_string(s.scenario) << '\n';
  if (s.reference) {
    std::cout << "reference_J " << format_number(s.reference_objective) << '\n'
              << "replications " << s.replications.size() << '\n';
    std::size_t converged = 0;
    for (const auto& r : s.replications) converged += r.converged ? 1 : 0;
    if (s.scenario == Scenario::squared_algo2) {
      std::cout << "converged_paths " << converged << '\n';
    }
    const OgQuantiles& first = s.og_quantiles.front();
    const OgQuantiles& last = s.og_quantiles.back();
    std::cout << "og_median_initial " << format_number(first.q50) << '\n'
              << "og_median_final " << format_number(last.q50) << '\n';
    for (const auto& r : s.replications) {
      for (const auto& ev : r.events) std::cerr << "seed " << r.seed << ": " << ev << '\n';
    }
  }
  report_ldp(s);
  for (const auto& f : s.written_files) std::cout << "wrote " << f << '\n';
  return 0;
}

int cmd_ldp(RunConfig cfg) {
  ExperimentConfig& e = cfg.experiment;
  e.scenario = Scenario::ldp_validate;
  ensure_output(e);
  const ExperimentSummary s = run_experiment(e);
  report_ldp(s);
  for (const auto& f : s.written_files) std::cout << "wrote " << f << '\n';
  return 0;
}

int dispatch(Command command, const Options& opt) {
  const RunConfig cfg = load(opt, command);
  switch (command) {
    case Command::rate: return cmd_rate(cfg);
    case Command::optimize: return cmd_optimize(cfg);
    case Command::algo1: return cmd_algo1(cfg);
    case Command::algo2: return cmd_algo2(cfg);
    case Command::experiment: return cmd_experiment(cfg);
    case Command::ldp: return cmd_ldp(cfg);
  }
  return kRuntimeExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal sampling allocation for sample average approximation"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config_path, "Configuration file (JSON, comments allowed)");
  app.add_option("--seed", opt.seed, "Seed; overrides the file's seed");
  app.add_option("--out", opt.out, "Output directory; overrides output_dir");
  app.add_flag("--verify", opt.verify, "Check optimize against the brute-force oracle (d <= 4)");

  std::optional<Command> command;
  auto sub = [&](const char* name, const char* help, Command c) {
    CLI::App* s = app.add_subcommand(name, help);
    s->callback([&command, c] { command = c; });
    return s;
  };

  CLI::App* rate = sub("rate", "Pair rate I(gamma, alpha_x, alpha_y) and its exponent", Command::rate);
  rate->add_option("--family", opt.rate.family, "gaussian or binomial");
  rate->add_option("--fx", opt.rate.fx, "Mean at x");
  rate->add_option("--fy", opt.rate.fy, "Mean at y");
  rate->add_option("--vx", opt.rate.vx, "Variance at x (gaussian)");
  rate->add_option("--vy", opt.rate.vy, "Variance at y (gaussian)");
  rate->add_option("--ax", opt.rate.ax, "Allocation at x");
  rate->add_option("--ay", opt.rate.ay, "Allocation at y");
  rate->add_option("--gamma", opt.rate.gamma, "Threshold gamma");
  rate->add_option("--m", opt.rate.m, "Binomial trial count");

  sub("optimize", "Optimal allocation for the true parameters", Command::optimize);
  sub("algo1", "Sequential allocation with closed-form rates", Command::algo1);
  sub("algo2", "EM-style sequential allocation with numerical rates", Command::algo2);
  CLI::App* experiment = sub("experiment", "Replicated runs with quantile summaries", Command::experiment);
  experiment->add_option("--replications", opt.replications, "Overrides replications");
  experiment->add_option("--threads", opt.threads, "Worker threads; 0 uses every core");
  sub("ldp", "Compare -(1/n) log P with the analytic rate", Command::ldp);

  app.footer(
      "Precedence: command-line flags override configuration-file values, which override "
      "built-in defaults.\nExit codes: 0 success, 1 configuration error, 2 runtime error.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  try {
    return dispatch(*command, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeExit;
  }
}
