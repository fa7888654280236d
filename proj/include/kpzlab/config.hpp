#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kpzlab/core_paths.hpp"

namespace kpzlab {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view text, std::string_view what) {
  std::string s = trim(text);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ValidationError(std::string(what) + ": cannot parse '" + s + "' as a number");
  return v;
}

inline std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::string s = trim(text);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ValidationError(std::string(what) + ": cannot parse '" + s + "' as a non-negative integer");
  return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  return out;
}

// Accepts "v", "v1,v2,...", or the range form "a:b:step" (inclusive of b up to rounding).
inline std::vector<double> parse_number_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(parse_double(parts[0], what));
    } else if (parts.size() == 3) {
      double a = parse_double(parts[0], what), b = parse_double(parts[1], what), st = parse_double(parts[2], what);
      if (!(st > 0) || b < a) throw ValidationError(std::string(what) + ": range needs a <= b and step > 0");
      auto count = static_cast<std::size_t>(std::floor((b - a) / st + 1e-9));
      for (std::size_t i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * st);
    } else {
      throw ValidationError(std::string(what) + ": expected a value, list, or a:b:step range");
    }
  }
  return out;
}

// "a,b,steps"
inline TimeGrid parse_grid(std::string_view text, std::string_view what = "grid") {
  auto parts = split(text, ',');
  if (parts.size() != 3) throw ValidationError(std::string(what) + ": expected a,b,steps");
  return TimeGrid(parse_double(parts[0], what), parse_double(parts[1], what), parse_u64(parts[2], what));
}

struct ExperimentConfig {
  std::string experiment;
  std::string op;
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::map<std::string, std::string> params;  // everything else, verbatim

  bool has(const std::string& key) const { return params.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  std::string get(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw ValidationError("config key '" + key + "' is required for op " + op);
    return it->second;
  }
  double number(const std::string& key, double fallback) const {
    return has(key) ? parse_double(get(key), key) : fallback;
  }
  std::size_t count(const std::string& key, std::size_t fallback) const {
    return has(key) ? parse_u64(get(key), key) : fallback;
  }
  std::vector<double> list(const std::string& key, const std::string& fallback) const {
    return parse_number_list(get(key, fallback), key);
  }

  // Canonical text: sorted key=value lines. Hash excludes nothing but output location,
  // which is never part of the config.
  std::string canonical() const {
    std::map<std::string, std::string> all(params);
    all["experiment"] = experiment;
    all["op"] = op;
    all["replicas"] = std::to_string(replicas);
    all["seed"] = std::to_string(seed);
    std::string s;
    for (const auto& [k, v] : all) s += k + "=" + v + "\n";
    return s;
  }
  std::uint64_t hash() const { return fnv1a(canonical()); }
};

inline const std::set<std::string>& documented_config_keys() {
  static const std::set<std::string> keys{"experiment", "op",   "replicas", "seed", "n",    "grid",  "window",
                                          "events",     "rate", "x",        "y",    "ks",   "eps",   "y1",
                                          "y2",         "ell",  "speeds",   "k",    "base", "nodes", "x0"};
  return keys;
}

// Flat "key = value" text; '#' starts a comment. Unknown keys are rejected.
inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!documented_config_keys().count(key))
      throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (key == "experiment") c.experiment = value;
    else if (key == "op") c.op = value;
    else if (key == "replicas") c.replicas = parse_u64(value, key);
    else if (key == "seed") { c.seed = parse_u64(value, key); c.seed_set = true; }
    else c.params[key] = value;
  }
  if (c.op.empty()) throw ValidationError("config is missing 'op'");
  if (c.experiment.empty()) c.experiment = c.op;
  require(c.replicas >= 1, "replicas must be at least 1");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace kpzlab
