#pragma once

// Run configuration: flat `key = value` text with [section] headers.
//
//   seed = 42
//   [model]
//   name = hopf
//   v0 = 0.5
//   [simulate]
//   mode = reduced
//   state = reduced:1,0,0,0, 0,0,0,0, 1, 0
//
// Global keys: seed, tol, output. Sections: model, geometry, simulate, compare, equilibria.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lpr/dynamics.hpp"
#include "lpr/error.hpp"
#include "lpr/system_model.hpp"

namespace lpr {

struct StateSpec {
  enum class Kind { Full, Reduced };
  Kind kind = Kind::Full;
  std::vector<double> values;  ///< empty means unset
  bool empty() const { return values.empty(); }
  bool operator==(const StateSpec&) const = default;
};

struct ModelConfig {
  std::string name = "planar-rotor";
  std::map<std::string, std::vector<double>> params;  ///< explicit overrides only
  bool operator==(const ModelConfig&) const = default;
};

struct GeometryConfig {
  std::vector<double> point;  ///< empty: a seeded sample
  bool operator==(const GeometryConfig&) const = default;
};

struct SimulateConfig {
  Mode mode = Mode::Reduced;
  StateSpec state;  ///< empty: the model's default state
  double t_end = 10.0;
  double dt = 1e-3;
  int project_every = 10;
  bool operator==(const SimulateConfig&) const = default;
};

struct CompareConfig {
  StateSpec state;
  double t_end = 10.0;
  double dt = 1e-3;
  int project_every = 10;
  double max_dev = 1e-6;
  bool operator==(const CompareConfig&) const = default;
};

struct EquilibriaConfig {
  std::vector<double> point;
  std::vector<double> momentum;
  int max_iter = 50;
  bool fix_momentum = true;
  bool operator==(const EquilibriaConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 42;
  double tol = 1e-10;
  std::string output;
  ModelConfig model;
  GeometryConfig geometry;
  SimulateConfig simulate;
  CompareConfig compare;
  EquilibriaConfig equilibria;
  bool operator==(const RunConfig&) const = default;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    fail(ErrorCode::ParseError, key + ": not a number: '" + t + "'");
  return x;
}

inline long long parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const long long x = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    fail(ErrorCode::ParseError, key + ": not an integer: '" + t + "'");
  return x;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (text.back() == ',') fail(ErrorCode::ParseError, key + ": trailing comma");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true") return true;
  if (t == "false") return false;
  fail(ErrorCode::ParseError, key + ": expected true or false, got '" + t + "'");
}

inline Mode parse_mode(const std::string& text) {
  const std::string t = trim(text);
  if (t == "full") return Mode::Full;
  if (t == "reduced") return Mode::Reduced;
  fail(ErrorCode::ParseError, "mode: expected full or reduced, got '" + t + "'");
}

inline StateSpec parse_state(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t.rfind("reduced:", 0) == 0) return {StateSpec::Kind::Reduced, parse_list(key, t.substr(8))};
  if (t.rfind("full:", 0) == 0) return {StateSpec::Kind::Full, parse_list(key, t.substr(5))};
  return {StateSpec::Kind::Full, parse_list(key, t)};
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
  return s;
}

inline std::string fmt(const StateSpec& s) {
  return (s.kind == StateSpec::Kind::Reduced ? "reduced:" : "full:") + fmt(s.values);
}

}  // namespace config_detail

/// Parameter keys accepted by each built-in model, with their arity.
inline const std::map<std::string, std::map<std::string, std::size_t>>& model_parameter_keys() {
  static const std::map<std::string, std::map<std::string, std::size_t>> keys = {
      {"planar-rotor", {{"k", 1}, {"r0", 1}, {"min_radius", 1}}},
      {"hopf", {{"v0", 1}, {"min_radius", 1}}},
      {"twisted-su2", {{"twist", 1}, {"kappa", 1}, {"inertia", 3}, {"k", 1}}},
  };
  return keys;
}

/// Set one key. Section is "" for the global keys.
inline void apply_setting(RunConfig& c, const std::string& section, const std::string& key, const std::string& value) {
  using namespace config_detail;
  const std::string qual = section.empty() ? key : section + "." + key;
  const auto unknown = [&]() { fail(ErrorCode::UnknownKey, "unknown key '" + qual + "'"); };
  if (section.empty()) {
    if (key == "seed") {
      const long long s = parse_int(key, value);
      if (s < 0) fail(ErrorCode::OutOfRange, "seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "tol") c.tol = parse_double(key, value);
    else if (key == "output") c.output = trim(value);
    else unknown();
  } else if (section == "model") {
    if (key == "name") c.model.name = trim(value);
    else c.model.params[key] = parse_list(qual, value);
  } else if (section == "geometry") {
    if (key == "point") c.geometry.point = parse_list(qual, value);
    else unknown();
  } else if (section == "simulate") {
    SimulateConfig& s = c.simulate;
    if (key == "mode") s.mode = parse_mode(value);
    else if (key == "state") s.state = parse_state(qual, value);
    else if (key == "t_end") s.t_end = parse_double(qual, value);
    else if (key == "dt") s.dt = parse_double(qual, value);
    else if (key == "project_every") s.project_every = static_cast<int>(parse_int(qual, value));
    else unknown();
  } else if (section == "compare") {
    CompareConfig& s = c.compare;
    if (key == "state") s.state = parse_state(qual, value);
    else if (key == "t_end") s.t_end = parse_double(qual, value);
    else if (key == "dt") s.dt = parse_double(qual, value);
    else if (key == "project_every") s.project_every = static_cast<int>(parse_int(qual, value));
    else if (key == "max_dev") s.max_dev = parse_double(qual, value);
    else unknown();
  } else if (section == "equilibria") {
    EquilibriaConfig& s = c.equilibria;
    if (key == "point") s.point = parse_list(qual, value);
    else if (key == "momentum") s.momentum = parse_list(qual, value);
    else if (key == "max_iter") s.max_iter = static_cast<int>(parse_int(qual, value));
    else if (key == "fix_momentum") s.fix_momentum = parse_bool(qual, value);
    else unknown();
  } else {
    fail(ErrorCode::UnknownKey, "unknown section '" + section + "'");
  }
}

/// Range and key checks that need the whole config.
inline void validate_config(const RunConfig& c) {
  const auto& keys = model_parameter_keys();
  const auto it = keys.find(c.model.name);
  if (it == keys.end()) fail(ErrorCode::UnknownKey, "unknown model '" + c.model.name + "'");
  for (const auto& [k, v] : c.model.params) {
    const auto kt = it->second.find(k);
    if (kt == it->second.end()) fail(ErrorCode::UnknownKey, "unknown key 'model." + k + "' for " + c.model.name);
    if (v.size() != kt->second)
      fail(ErrorCode::OutOfRange, "model." + k + " takes " + std::to_string(kt->second) + " value(s)");
  }
  const auto positive = [](double x, const std::string& what) {
    if (!(x > 0.0) || !std::isfinite(x)) fail(ErrorCode::OutOfRange, what + " must be positive");
  };
  positive(c.tol, "tol");
  positive(c.simulate.t_end, "simulate.t_end");
  positive(c.simulate.dt, "simulate.dt");
  positive(c.compare.t_end, "compare.t_end");
  positive(c.compare.dt, "compare.dt");
  positive(c.compare.max_dev, "compare.max_dev");
  if (c.simulate.project_every < 0) fail(ErrorCode::OutOfRange, "simulate.project_every must be non-negative");
  if (c.compare.project_every < 0) fail(ErrorCode::OutOfRange, "compare.project_every must be non-negative");
  if (c.equilibria.max_iter < 1) fail(ErrorCode::OutOfRange, "equilibria.max_iter must be positive");
}

/// Parse configuration text. Lines are `key = value`, `[section]`, blank, or `#` comments.
inline RunConfig parse_config(std::string_view text) {
  using namespace config_detail;
  static const std::set<std::string> sections = {"model", "geometry", "simulate", "compare", "equilibria"};
  RunConfig c;
  std::string section;
  std::set<std::string> seen;
  std::stringstream ss{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::ParseError, where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) fail(ErrorCode::UnknownKey, where + "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ParseError, where + "expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorCode::ParseError, where + "missing key");
    const std::string qual = section.empty() ? key : section + "." + key;
    if (!seen.insert(qual).second) fail(ErrorCode::ParseError, where + "duplicate key '" + qual + "'");
    try {
      apply_setting(c, section, key, value);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError) fail(ErrorCode::ParseError, where + e.what());
      throw;
    }
  }
  validate_config(c);
  return c;
}

/// Canonical text: every key in a fixed order, unset lists omitted, numbers with 17 digits.
inline std::string serialize_config(const RunConfig& c) {
  using config_detail::fmt;
  std::string s;
  const auto put = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  put("seed", std::to_string(c.seed));
  put("tol", fmt(c.tol));
  if (!c.output.empty()) put("output", c.output);
  s += "\n[model]\n";
  put("name", c.model.name);
  for (const auto& [k, v] : c.model.params) put(k, fmt(v));
  s += "\n[geometry]\n";
  if (!c.geometry.point.empty()) put("point", fmt(c.geometry.point));
  s += "\n[simulate]\n";
  put("mode", mode_name(c.simulate.mode));
  if (!c.simulate.state.empty()) put("state", fmt(c.simulate.state));
  put("t_end", fmt(c.simulate.t_end));
  put("dt", fmt(c.simulate.dt));
  put("project_every", std::to_string(c.simulate.project_every));
  s += "\n[compare]\n";
  if (!c.compare.state.empty()) put("state", fmt(c.compare.state));
  put("t_end", fmt(c.compare.t_end));
  put("dt", fmt(c.compare.dt));
  put("project_every", std::to_string(c.compare.project_every));
  put("max_dev", fmt(c.compare.max_dev));
  s += "\n[equilibria]\n";
  if (!c.equilibria.point.empty()) put("point", fmt(c.equilibria.point));
  if (!c.equilibria.momentum.empty()) put("momentum", fmt(c.equilibria.momentum));
  put("max_iter", std::to_string(c.equilibria.max_iter));
  put("fix_momentum", c.equilibria.fix_momentum ? "true" : "false");
  return s;
}

/// Build the named model with the configured overrides.
inline SystemModel build_model(const ModelConfig& mc) {
  const auto get = [&](const std::string& k, double def) {
    const auto it = mc.params.find(k);
    return it == mc.params.end() ? def : it->second.at(0);
  };
  if (mc.name == "planar-rotor") {
    PlanarRotorParams p;
    return make_planar_rotor({get("k", p.k), get("r0", p.r0), get("min_radius", p.min_radius)});
  }
  if (mc.name == "hopf") {
    HopfParams p;
    return make_hopf({get("v0", p.v0), get("min_radius", p.min_radius)});
  }
  if (mc.name == "twisted-su2") {
    TwistedSu2Params p;
    p.connection = linear_twist_connection(get("twist", 0.0));
    p.kappa = get("kappa", p.kappa);
    p.k = get("k", p.k);
    if (const auto it = mc.params.find("inertia"); it != mc.params.end())
      p.inertia = Eigen::Map<const VectorXd>(it->second.data(), static_cast<Eigen::Index>(it->second.size()));
    return make_twisted_su2(p);
  }
  fail(ErrorCode::UnknownKey, "unknown model '" + mc.name + "'");
}

}  // namespace lpr
