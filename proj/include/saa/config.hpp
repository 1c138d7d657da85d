#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "saa/harness.hpp"

namespace saa {

/// Invalid or incomplete configuration. Messages name the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pair parameters for the `rate` subcommand.
struct RateSpec {
  std::optional<std::string> family;  ///< gaussian | binomial
  std::optional<double> fx, fy, vx, vy, ax, ay;
  std::optional<double> gamma;
  std::optional<int> m;
};

/// Parsed configuration document.
struct RunConfig {
  ExperimentConfig experiment;
  RateSpec rate;
  bool verify = false;
  /// Dotted paths of every key present in the document.
  std::set<std::string> present;

  bool has(const std::string& key) const { return present.count(key) > 0; }
};

enum class Command { rate, optimize, algo1, algo2, experiment, ldp };

/// Parses a JSON document (comments allowed). Unknown keys and ill-typed
/// values raise ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Throws ConfigError naming the first key the command needs but the
/// document lacks.
void require_keys(const RunConfig& cfg, Command command);

}  // namespace saa
