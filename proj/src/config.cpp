#include "saa/config.hpp"

#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string_view>

#include <json.hpp>

namespace saa {
namespace {

using Json = nlohmann::json;

class Reader {
 public:
  Reader(const Json& node, std::string prefix, std::set<std::string>& present)
      : node_(node), prefix_(std::move(prefix)), present_(present) {
    if (!node_.is_object()) {
      throw ConfigError(prefix_.empty() ? "configuration must be an object"
                                        : "'" + prefix_ + "' must be an object");
    }
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    for (const auto& [key, value] : node_.items()) {
      bool known = false;
      for (auto k : keys) known = known || key == k;
      if (!known) throw ConfigError("unknown key '" + path(key) + "'");
    }
  }

  const Json* find(const std::string& key) const {
    auto it = node_.find(key);
    if (it == node_.end()) return nullptr;
    present_.insert(path(key));
    return &*it;
  }

  std::string path(std::string_view key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
  }

  void number(const std::string& key, double& out) const {
    if (const Json* v = find(key)) out = as_number(*v, key);
  }
  void number(const std::string& key, std::optional<double>& out) const {
    if (const Json* v = find(key)) out = as_number(*v, key);
  }

  template <class T>
  void integer(const std::string& key, T& out) const {
    if (const Json* v = find(key)) out = as_integer<T>(*v, key);
  }
  template <class T>
  void integer(const std::string& key, std::optional<T>& out) const {
    if (const Json* v = find(key)) out = as_integer<T>(*v, key);
  }

  void boolean(const std::string& key, bool& out) const {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError("'" + path(key) + "' must be a boolean");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) const {
    if (const Json* v = find(key)) out = as_string(*v, key);
  }
  void string(const std::string& key, std::optional<std::string>& out) const {
    if (const Json* v = find(key)) out = as_string(*v, key);
  }

  void numbers(const std::string& key, std::vector<double>& out) const {
    if (const Json* v = find(key)) {
      if (!v->is_array()) throw ConfigError("'" + path(key) + "' must be an array of numbers");
      out.clear();
      for (const auto& e : *v) out.push_back(as_number(e, key));
    }
  }

  template <class T>
  void integers(const std::string& key, std::vector<T>& out) const {
    if (const Json* v = find(key)) {
      if (!v->is_array()) throw ConfigError("'" + path(key) + "' must be an array of integers");
      out.clear();
      for (const auto& e : *v) out.push_back(as_integer<T>(e, key));
    }
  }

  std::optional<Reader> child(const std::string& key) const {
    const Json* v = find(key);
    if (!v) return std::nullopt;
    return Reader(*v, path(key), present_);
  }

 private:
  double as_number(const Json& v, const std::string& key) const {
    if (!v.is_number()) throw ConfigError("'" + path(key) + "' must be a number");
    return v.get<double>();
  }

  template <class T>
  T as_integer(const Json& v, const std::string& key) const {
    if (v.is_number_unsigned()) {
      auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
        throw ConfigError("'" + path(key) + "' is out of range");
      }
      return static_cast<T>(u);
    }
    if (v.is_number_integer()) {
      auto s = v.get<std::int64_t>();
      if (std::numeric_limits<T>::is_signed ? s < static_cast<std::int64_t>(std::numeric_limits<T>::min())
                                            : s < 0) {
        throw ConfigError("'" + path(key) + "' must be non-negative");
      }
      return static_cast<T>(s);
    }
    throw ConfigError("'" + path(key) + "' must be an integer");
  }

  std::string as_string(const Json& v, const std::string& key) const {
    if (!v.is_string()) throw ConfigError("'" + path(key) + "' must be a string");
    return v.get<std::string>();
  }

  const Json& node_;
  std::string prefix_;
  std::set<std::string>& present_;
};

void read_grid(const Reader& r, GridSpec& g) {
  r.allow({"points", "lo", "hi", "count"});
  r.numbers("points", g.points);
  r.number("lo", g.lo);
  r.number("hi", g.hi);
  r.integer("count", g.count);
}

void read_model(const Reader& r, ModelSpec& m) {
  r.allow({"family", "curvature", "center", "offset", "means", "variance", "variances", "trials",
           "noise_mean", "noise_variance"});
  std::string family;
  r.string("family", family);
  if (!family.empty()) {
    auto f = parse_family(family);
    if (!f) throw ConfigError("'model.family' must be gaussian, binomial or squared_error");
    m.family = *f;
  }
  r.number("curvature", m.curvature);
  r.number("center", m.center);
  r.number("offset", m.offset);
  r.numbers("means", m.means);
  r.number("variance", m.variance);
  r.numbers("variances", m.variances);
  r.integer("trials", m.trials);
  r.number("noise_mean", m.noise_mean);
  r.number("noise_variance", m.noise_variance);
}

void read_algo1(const Reader& r, Algo1Config& a) {
  r.allow({"pilot", "per_iteration", "total_budget", "known_variance", "warm_start"});
  r.integer("pilot", a.pilot);
  r.integer("per_iteration", a.per_iteration);
  r.integer("total_budget", a.total_budget);
  r.boolean("known_variance", a.known_variance);
  r.boolean("warm_start", a.warm_start);
}

void read_algo2(const Reader& r, Algo2Config& a) {
  r.allow({"initial", "pilot", "per_iteration", "tolerance", "max_iterations", "budget_coupling"});
  std::vector<double> initial;
  r.numbers("initial", initial);
  if (!initial.empty()) {
    try {
      a.initial = Allocation(initial);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("'algo2.initial': ") + e.what());
    }
  }
  r.integer("pilot", a.pilot);
  r.integer("per_iteration", a.per_iteration);
  r.number("tolerance", a.tolerance);
  r.integer("max_iterations", a.max_iterations);
  r.number("budget_coupling", a.budget_coupling);
}

void read_ldp(const Reader& r, LdpSpec& l) {
  r.allow({"gamma", "n_ladder", "mc_replications", "x", "y", "alpha_x", "alpha_y"});
  r.number("gamma", l.gamma);
  r.integers("n_ladder", l.n_ladder);
  r.integer("mc_replications", l.mc_replications);
  r.integer("x", l.x);
  r.integer("y", l.y);
  r.number("alpha_x", l.alpha_x);
  r.number("alpha_y", l.alpha_y);
}

void read_optimizer(const Reader& r, AscentSettings& s) {
  r.allow({"method", "max_iterations", "step_scale", "patience", "tolerance", "relative_gap"});
  std::string method;
  r.string("method", method);
  if (method == "barrier_newton") {
    s.method = AscentMethod::barrier_newton;
  } else if (method == "supergradient") {
    s.method = AscentMethod::supergradient;
  } else if (!method.empty()) {
    throw ConfigError("'optimizer.method' must be barrier_newton or supergradient");
  }
  r.integer("max_iterations", s.max_iterations);
  r.number("step_scale", s.step_scale);
  r.integer("patience", s.patience);
  r.number("tolerance", s.tolerance);
  r.number("relative_gap", s.relative_gap);
}

void read_rate(const Reader& r, RateSpec& s) {
  r.allow({"family", "fx", "fy", "vx", "vy", "ax", "ay", "gamma", "m"});
  r.string("family", s.family);
  r.number("fx", s.fx);
  r.number("fy", s.fy);
  r.number("vx", s.vx);
  r.number("vy", s.vy);
  r.number("ax", s.ax);
  r.number("ay", s.ay);
  r.number("gamma", s.gamma);
  r.integer("m", s.m);
}

RunConfig from_json(const Json& doc) {
  RunConfig cfg;
  Reader top(doc, "", cfg.present);
  top.allow({"scenario", "seed", "replications", "output_dir", "threads", "delta", "alpha_min",
             "verify", "grid", "model", "algo1", "algo2", "ldp", "optimizer", "rate"});
  ExperimentConfig& e = cfg.experiment;
  std::string scenario;
  top.string("scenario", scenario);
  if (!scenario.empty()) {
    auto s = parse_scenario(scenario);
    if (!s) {
      throw ConfigError(
          "'scenario' must be gaussian-algo1, binomial-algo1, squared-algo2 or ldp-validate");
    }
    e.scenario = *s;
  }
  top.integer("seed", e.seed_base);
  top.integer("replications", e.replications);
  top.string("output_dir", e.output_dir);
  top.integer("threads", e.threads);
  top.number("delta", e.delta);
  top.number("alpha_min", e.alpha_min);
  top.boolean("verify", cfg.verify);
  if (auto r = top.child("grid")) read_grid(*r, e.grid);
  if (auto r = top.child("model")) read_model(*r, e.model);
  if (auto r = top.child("algo1")) read_algo1(*r, e.algo1);
  if (auto r = top.child("algo2")) read_algo2(*r, e.algo2);
  if (auto r = top.child("ldp")) read_ldp(*r, e.ldp);
  if (auto r = top.child("optimizer")) read_optimizer(*r, e.ascent);
  if (auto r = top.child("rate")) read_rate(*r, cfg.rate);
  return cfg;
}

void need(const RunConfig& cfg, const std::string& key) {
  if (!cfg.has(key)) throw ConfigError("missing required key '" + key + "'");
}

void need_model(const RunConfig& cfg) {
  need(cfg, "model.family");
  if (!cfg.has("grid.points") && !cfg.has("grid.count")) {
    throw ConfigError("missing required key 'grid.count' (or 'grid.points')");
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  return from_json(doc);
}

RunConfig parse_config(std::istream& in) {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  return parse_config(in);
}

void require_keys(const RunConfig& cfg, Command command) {
  switch (command) {
    case Command::rate:
      break;
    case Command::optimize:
      need_model(cfg);
      need(cfg, "delta");
      break;
    case Command::algo1:
      need_model(cfg);
      need(cfg, "delta");
      need(cfg, "algo1.total_budget");
      break;
    case Command::algo2:
      need_model(cfg);
      need(cfg, "delta");
      need(cfg, "algo2.per_iteration");
      break;
    case Command::experiment:
      need(cfg, "scenario");
      need_model(cfg);
      switch (cfg.experiment.scenario) {
        case Scenario::gaussian_algo1:
        case Scenario::binomial_algo1:
          need(cfg, "delta");
          need(cfg, "algo1.total_budget");
          need(cfg, "replications");
          break;
        case Scenario::squared_algo2:
          need(cfg, "delta");
          need(cfg, "algo2.per_iteration");
          need(cfg, "replications");
          break;
        case Scenario::ldp_validate:
          need(cfg, "ldp.gamma");
          break;
      }
      break;
    case Command::ldp:
      need_model(cfg);
      need(cfg, "ldp.gamma");
      break;
  }
}

}  // namespace saa
