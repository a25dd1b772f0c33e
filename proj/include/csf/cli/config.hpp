#pragma once

#include <cmath>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "csf/warped_metric.hpp"

namespace csf::cli {

/// Invalid configuration; the tool exits with status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { Bloom, Nonunique, Barriers, Invariants, UniquenessProbe, Geodesics };

inline const std::vector<std::pair<Scenario, std::string>>& scenario_names() {
  static const std::vector<std::pair<Scenario, std::string>> names = {
      {Scenario::Bloom, "bloom"},
      {Scenario::Nonunique, "nonunique"},
      {Scenario::Barriers, "barriers"},
      {Scenario::Invariants, "invariants"},
      {Scenario::UniquenessProbe, "uniqueness-probe"},
      {Scenario::Geodesics, "geodesics"},
  };
  return names;
}

inline std::string to_string(Scenario s) {
  for (const auto& [k, name] : scenario_names()) {
    if (k == s) return name;
  }
  return "unknown";
}

inline Scenario parse_scenario(const std::string& name) {
  for (const auto& [k, n] : scenario_names()) {
    if (n == name) return k;
  }
  std::string all;
  for (const auto& [k, n] : scenario_names()) all += (all.empty() ? "" : ", ") + n;
  if (name.empty()) throw ConfigError("missing scenario (one of: " + all + ")");
  throw ConfigError("unknown scenario '" + name + "' (one of: " + all + ")");
}

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"paper", "flat", "flat-polar", "cigar"};
  return names;
}

/// Built-in metrics by name. "cigar" has phi' = 1.
inline WarpingFunction metric_by_name(const std::string& name) {
  if (name == "paper") return WarpingFunction::paper();
  if (name == "flat") return WarpingFunction::flat_cartesian();
  if (name == "flat-polar") return WarpingFunction::flat_polar();
  if (name == "cigar") {
    return WarpingFunction::custom("cigar", [](double x) { return PhiValues{x, 1.0, 0.0}; });
  }
  std::string all;
  for (const auto& n : metric_names()) all += (all.empty() ? "" : ", ") + n;
  throw ConfigError("unknown metric '" + name + "' (built-ins: " + all + ")");
}

struct ExperimentConfig {
  Scenario scenario = Scenario::Bloom;
  std::optional<std::string> metric;
  double resolution = 40.0;  // nodes per unit length
  double dt = 1e-3;
  std::optional<double> T;
  std::vector<int> ns = {8, 16, 24};
  std::string output_dir = "csf-out";
  bool emit_svg = false;

  std::string metric_name() const {
    if (metric) return *metric;
    return scenario == Scenario::UniquenessProbe ? "flat" : "paper";
  }

  double horizon() const {
    if (T) return *T;
    switch (scenario) {
      case Scenario::Nonunique: return 0.4;
      case Scenario::UniquenessProbe: return 1.0;
      default: return 0.5;
    }
  }
};

/// Values given on the command line; unset fields keep file or default values.
struct Overrides {
  std::optional<std::string> metric;
  std::optional<double> resolution;
  std::optional<double> dt;
  std::optional<double> T;
  std::optional<std::string> ns;
  std::optional<std::string> output_dir;
  bool emit_svg = false;
};

namespace detail {

inline double parse_double(const std::string& text, const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (text.empty() || used != text.size() || !std::isfinite(v)) {
    throw ConfigError(field + ": expected a number, got '" + text + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& text, const std::string& field) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(field + ": expected true or false, got '" + text + "'");
}

inline std::vector<int> parse_ns(const std::string& text, const std::string& field) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double v = parse_double(item, field);
    if (v != std::floor(v) || v < 2 || v > 1000) {
      throw ConfigError(field + ": entries must be integers in [2, 1000], got '" + item + "'");
    }
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ConfigError(field + ": empty list");
  return out;
}

inline void apply_section(ExperimentConfig& cfg, const boost::property_tree::ptree& sec,
                          const std::string& name) {
  for (const auto& [key, node] : sec) {
    if (!node.empty()) throw ConfigError("[" + name + "] " + key + ": nested keys are not supported");
    const std::string value = node.data();
    const std::string field = "[" + name + "] " + key;
    if (key == "metric") {
      cfg.metric = value;
    } else if (key == "resolution") {
      cfg.resolution = parse_double(value, field);
    } else if (key == "dt") {
      cfg.dt = parse_double(value, field);
    } else if (key == "T") {
      cfg.T = parse_double(value, field);
    } else if (key == "ns") {
      cfg.ns = parse_ns(value, field);
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "emit_svg") {
      cfg.emit_svg = parse_bool(value, field);
    } else {
      throw ConfigError(field + ": unknown key (metric, resolution, dt, T, ns, output_dir, emit_svg)");
    }
  }
}

}  // namespace detail

inline void validate(const ExperimentConfig& cfg) {
  if (!(cfg.resolution >= 10.0)) throw ConfigError("resolution must be >= 10");
  if (!(cfg.dt > 0.0 && cfg.dt <= 1e-2)) throw ConfigError("dt must lie in (0, 1e-2]");
  if (cfg.T && !(*cfg.T > 0.0)) throw ConfigError("T must be > 0");
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    if (cfg.ns[i] < 2 || (i > 0 && cfg.ns[i] <= cfg.ns[i - 1])) {
      throw ConfigError("ns must be increasing and >= 2");
    }
  }
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  metric_by_name(cfg.metric_name());
}

/// INI text: [experiment] holds shared keys, a section named after the
/// scenario overrides them. Comments start with ';'.
inline void apply_ini(ExperimentConfig& cfg, std::istream& in, const std::string& source) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  const std::string own = to_string(cfg.scenario);
  for (const auto& [name, sec] : tree) {
    if (sec.empty() && !sec.data().empty()) {
      throw ConfigError(source + ": key '" + name + "' outside a section");
    }
    bool known = name == "experiment";
    for (const auto& [k, n] : scenario_names()) known = known || n == name;
    if (!known) throw ConfigError(source + ": unknown section [" + name + "]");
  }
  try {
    if (auto s = tree.get_child_optional("experiment")) detail::apply_section(cfg, *s, "experiment");
    if (auto s = tree.get_child_optional(own)) detail::apply_section(cfg, *s, own);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

inline ExperimentConfig make_config(const std::string& scenario,
                                    const std::optional<std::string>& config_path,
                                    const Overrides& o) {
  ExperimentConfig cfg;
  cfg.scenario = parse_scenario(scenario);
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) throw ConfigError("cannot open config file '" + *config_path + "'");
    apply_ini(cfg, in, *config_path);
  }
  if (o.metric) cfg.metric = *o.metric;
  if (o.resolution) cfg.resolution = *o.resolution;
  if (o.dt) cfg.dt = *o.dt;
  if (o.T) cfg.T = *o.T;
  if (o.ns) cfg.ns = detail::parse_ns(*o.ns, "--ns");
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.emit_svg) cfg.emit_svg = true;
  validate(cfg);
  return cfg;
}

/// CSF_LAB_THREADS, else the available parallelism.
inline unsigned thread_cap() {
  const char* env = std::getenv("CSF_LAB_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  const double v = detail::parse_double(env, "CSF_LAB_THREADS");
  if (v < 1 || v != std::floor(v) || v > 1024) {
    throw ConfigError("CSF_LAB_THREADS must be a positive integer");
  }
  return static_cast<unsigned>(v);
}

}  // namespace csf::cli
