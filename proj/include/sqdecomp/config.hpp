#pragma once

// Plain `key = value` files for FitConfig. Keys are the FitConfig field names
// (bounds flattened to a_min, a_max, e_min, e_max); `#` starts a comment.

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "sqdecomp/error.hpp"
#include "sqdecomp/fitter.hpp"

namespace sqdecomp {

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

using Setter = std::function<void(FitConfig&, const std::string& key, const std::string& value)>;

template <class T>
Setter set_field(T FitConfig::*field) {
  return [field](FitConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number<T>(k, v); };
}

inline Setter set_bound(double ParameterBounds::*field) {
  return [field](FitConfig& c, const std::string& k, const std::string& v) {
    c.bounds.*field = parse_number<double>(k, v);
  };
}

inline const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> setters{
      {"max_depth", set_field(&FitConfig::max_depth)},
      {"iterations", set_field(&FitConfig::iterations)},
      {"step_size", set_field(&FitConfig::step_size)},
      {"momentum", set_field(&FitConfig::momentum)},
      {"gradient_clip", set_field(&FitConfig::gradient_clip)},
      {"restarts", set_field(&FitConfig::restarts)},
      {"sharpness", set_field(&FitConfig::sharpness)},
      {"sharpness_start", set_field(&FitConfig::sharpness_start)},
      {"anneal_fraction", set_field(&FitConfig::anneal_fraction)},
      {"seed", set_field(&FitConfig::seed)},
      {"a_min", set_bound(&ParameterBounds::a_min)},
      {"a_max", set_bound(&ParameterBounds::a_max)},
      {"e_min", set_bound(&ParameterBounds::e_min)},
      {"e_max", set_bound(&ParameterBounds::e_max)},
      {"translation_limit", set_field(&FitConfig::translation_limit)},
      {"samples_uniform", set_field(&FitConfig::samples_uniform)},
      {"samples_surface", set_field(&FitConfig::samples_surface)},
      {"surface_sigma", set_field(&FitConfig::surface_sigma)},
      {"threads", set_field(&FitConfig::threads)},
  };
  return setters;
}

}  // namespace detail

/// Applies one `key`/`value` pair; unknown keys are an error.
inline void apply_config_value(FitConfig& cfg, const std::string& key, const std::string& value) {
  const auto& setters = detail::config_setters();
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

/// Reads `key = value` lines on top of `base`.
inline FitConfig parse_fit_config(std::istream& in, FitConfig base = {}) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body(detail::trim(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::trim(std::string_view(body).substr(0, eq)));
    const std::string value(detail::trim(std::string_view(body).substr(eq + 1)));
    apply_config_value(base, key, value);
  }
  return base;
}

inline FitConfig load_fit_config(const std::string& path, FitConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_fit_config(in, base);
}

}  // namespace sqdecomp
