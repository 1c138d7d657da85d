#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "saa/alloc_opt.hpp"
#include "saa/config.hpp"
#include "saa/harness.hpp"
#include "saa/rate_functions.hpp"
#include "saa/sequential.hpp"

namespace py = pybind11;
using namespace saa;

namespace {

ExperimentConfig experiment_from_json(const std::string& text) {
  return parse_config_text(text).experiment;
}

py::dict optimize_config(const std::string& text) {
  const ExperimentConfig cfg = experiment_from_json(text);
  const DesignGrid grid = cfg.grid.build();
  const LossModel model = cfg.model.build(grid);
  const AllocProblem problem = reference_problem(model, cfg.delta, cfg.alpha_min, cfg.ascent);
  const OptimizeResult res = optimize(problem);
  py::dict out;
  out["alpha"] = std::vector<double>(res.alpha.weights().begin(), res.alpha.weights().end());
  out["objective"] = res.objective;
  out["iterations"] = res.iterations;
  out["converged"] = res.converged;
  out["q_members"] = std::vector<std::size_t>(problem.q_members().begin(), problem.q_members().end());
  return out;
}

py::dict ldp_row(const LdpRow& r) {
  py::dict d;
  d["n"] = r.n;
  d["log_prob"] = r.log_prob;
  d["implied_rate"] = r.implied_rate;
  d["analytic_rate"] = r.analytic_rate;
  d["exact"] = r.exact;
  d["events"] = r.events;
  d["few_events"] = r.few_events;
  d["lower_bound"] = r.lower_bound;
  return d;
}

py::dict experiment_config(const std::string& text) {
  ExperimentSummary s;
  {
    py::gil_scoped_release release;
    s = run_experiment(experiment_from_json(text));
  }
  py::dict out;
  out["scenario"] = std::string(to_string(s.scenario));
  out["x"] = s.x;
  out["f"] = s.f;
  if (s.reference) {
    out["reference"] = std::vector<double>(s.reference->weights().begin(), s.reference->weights().end());
  } else {
    out["reference"] = py::none();
  }
  out["reference_objective"] = s.reference_objective;
  out["mean_final_alpha"] = s.mean_final_alpha;
  py::list og;
  for (const auto& q : s.og_quantiles) {
    og.append(py::make_tuple(q.iteration, q.cumulative_samples, q.q10, q.q50, q.q90));
  }
  out["og_quantiles"] = og;
  std::vector<std::uint64_t> seeds;
  for (const auto& r : s.replications) seeds.push_back(r.seed);
  out["seeds"] = seeds;
  py::list ldp;
  for (const auto& r : s.ldp) ldp.append(ldp_row(r));
  out["ldp"] = ldp;
  out["written_files"] = s.written_files;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Large-deviations sampling allocation for sample average approximation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<RateResult>(m, "RateResult")
      .def_readonly("value", &RateResult::value)
      .def_readonly("t_star", &RateResult::t_star)
      .def_readonly("converged", &RateResult::converged)
      .def_readonly("iterations", &RateResult::iterations)
      .def("__repr__", [](const RateResult& r) {
        return "RateResult(value=" + format_number(r.value) + ", t_star=" + format_number(r.t_star) + ")";
      });

  m.def("pair_rate_gaussian", &pair_rate_gaussian, py::arg("gamma"), py::arg("f_x"), py::arg("f_y"),
        py::arg("var_x"), py::arg("var_y"), py::arg("alpha_x"), py::arg("alpha_y"));
  m.def("pair_rate_binomial", &pair_rate_binomial, py::arg("f_x"), py::arg("f_y"), py::arg("trials"),
        py::arg("alpha_x"), py::arg("alpha_y"));
  m.def(
      "pair_rate_numeric_gaussian",
      [](double gamma, double fx, double fy, double vx, double vy, double ax, double ay) {
        return pair_rate_numeric(gamma, ax, ay, GaussianCgf(fx, vx), GaussianCgf(fy, vy));
      },
      py::arg("gamma"), py::arg("f_x"), py::arg("f_y"), py::arg("var_x"), py::arg("var_y"),
      py::arg("alpha_x"), py::arg("alpha_y"));
  m.def(
      "pair_rate_numeric_binomial",
      [](double gamma, double fx, double fy, int trials, double ax, double ay) {
        return pair_rate_numeric(gamma, ax, ay, BinomialCgf(fx / trials, trials),
                                 BinomialCgf(fy / trials, trials));
      },
      py::arg("gamma"), py::arg("f_x"), py::arg("f_y"), py::arg("trials"), py::arg("alpha_x"),
      py::arg("alpha_y"));

  m.def("optimize", &optimize_config, py::arg("config_json"),
        "Optimal allocation for the true parameters of a JSON configuration.");
  m.def("run_experiment", &experiment_config, py::arg("config_json"),
        "Runs the configured scenario and returns its summary.");

  m.def(
      "multinomial_schedule",
      [](const std::vector<double>& alpha, std::size_t n, std::uint64_t seed) {
        Engine rng = make_stream(seed, 0);
        return multinomial_schedule(Allocation(alpha), n, rng);
      },
      py::arg("alpha"), py::arg("n"), py::arg("seed") = 0);
  m.def("log_normal_tail", &log_normal_tail, py::arg("z"));
}
