#pragma once

// Run configuration: a flat key=value map merged from a config file, the
// environment and command-line flags (later sources win), then validated.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "apnorm/ap_norm.hpp"
#include "apnorm/common.hpp"
#include "apnorm/growth.hpp"
#include "apnorm/phases.hpp"

namespace apnorm {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Settings = std::map<std::string, std::string>;

inline constexpr const char* cache_env_var = "APNORM_CACHE_DIR";

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + text + "'");
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

}  // namespace detail

/// Every accepted key, in echo order.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "family", "m", "value", "k", "alpha", "depth", "base", "p", "lambda", "lambda_min", "lambda_max",
      "grid.min_n", "grid.oversample", "grid.degree_factor", "grid.max_doublings", "grid.max_points",
      "grid.annulus_tolerance", "grid.fixed_n", "grid.factored", "discard_prefix", "certificates", "samples", "seed",
      "workers", "cache_dir", "format", "output", "plot_dir"};
  return keys;
}

/// Reads `key = value` lines; '#' starts a comment. Unknown keys are rejected.
inline Settings read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Settings out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    out[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return out;
}

/// `from` wins on shared keys.
inline void merge_settings(Settings& into, const Settings& from) {
  for (const auto& [k, v] : from) into[k] = v;
}

struct RunConfig {
  std::string family = "cosine";
  int m = 1;
  PhaseParams params;
  std::vector<double> ps{1.0};
  std::vector<double> lambda_list;  // when empty, the dyadic range is used
  double lambda_min = 8.0;
  double lambda_max = 64.0;
  GridPolicy policy;
  std::optional<std::size_t> discard_prefix;  // unset: 2, reduced so that 4 rows remain
  bool certificates = true;
  std::size_t samples = 100;
  std::uint64_t seed = 0x5eed;
  unsigned workers = 0;
  std::string cache_dir;
  std::string format = "csv";
  std::string output;  // empty means stdout
  std::string plot_dir;

  Phase phase() const { return builtin(family, m, params); }

  std::vector<double> lambdas() const {
    if (!lambda_list.empty()) return lambda_list;
    std::vector<double> v;
    for (double l = lambda_min; l <= lambda_max * (1 + 1e-12); l *= 2.0) v.push_back(l);
    return v;
  }

  std::size_t effective_discard() const {
    if (discard_prefix) return *discard_prefix;
    const std::size_t rows = lambdas().size();
    return rows > 4 ? std::min<std::size_t>(2, rows - 4) : 0;
  }

  /// Canonical key=value pairs in config_keys() order.
  std::vector<std::pair<std::string, std::string>> echo() const {
    return {{"family", family},
            {"m", std::to_string(m)},
            {"value", format_double(params.value)},
            {"k", detail::join(params.k)},
            {"alpha", format_double(params.alpha)},
            {"depth", std::to_string(params.depth)},
            {"base", params.base},
            {"p", detail::join(ps)},
            {"lambda", detail::join(lambdas())},
            {"lambda_min", format_double(lambda_min)},
            {"lambda_max", format_double(lambda_max)},
            {"grid.min_n", std::to_string(policy.min_n)},
            {"grid.oversample", format_double(policy.oversample)},
            {"grid.degree_factor", std::to_string(policy.degree_factor)},
            {"grid.max_doublings", std::to_string(policy.max_doublings)},
            {"grid.max_points", std::to_string(policy.max_points)},
            {"grid.annulus_tolerance", format_double(policy.annulus_tolerance)},
            {"grid.fixed_n", std::to_string(policy.fixed_n)},
            {"grid.factored", policy.allow_factored ? "true" : "false"},
            {"discard_prefix", std::to_string(effective_discard())},
            {"certificates", certificates ? "true" : "false"},
            {"samples", std::to_string(samples)},
            {"seed", std::to_string(seed)},
            {"workers", std::to_string(workers)},
            {"cache_dir", cache_dir},
            {"format", format},
            {"output", output},
            {"plot_dir", plot_dir}};
  }

  SweepPlan plan() const {
    SweepPlan plan;
    plan.phase = phase();
    plan.ps = ps;
    plan.lambdas = lambdas();
    plan.policy = policy;
    plan.workers = workers;
    plan.with_certificates = certificates;
    plan.cert.concentration_samples = samples;
    plan.cert.seed = seed;
    plan.cert.fit.seed = seed;
    plan.cache_dir = cache_dir;
    plan.discard_prefix = effective_discard();
    return plan;
  }
};

/// Validates the merged settings; every failure is a ConfigError.
inline RunConfig parse_settings(const Settings& s) {
  using detail::parse_number;
  RunConfig c;
  for (const auto& [key, text] : s) {
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    if (key == "family") {
      c.family = text;
    } else if (key == "m") {
      c.m = parse_number<int>(key, text);
    } else if (key == "value") {
      c.params.value = parse_number<double>(key, text);
    } else if (key == "k") {
      c.params.k.clear();
      for (const auto& item : detail::split_list(text)) c.params.k.push_back(parse_number<int>(key, item));
    } else if (key == "alpha") {
      c.params.alpha = parse_number<double>(key, text);
    } else if (key == "depth") {
      c.params.depth = parse_number<int>(key, text);
    } else if (key == "base") {
      c.params.base = text;
    } else if (key == "p") {
      c.ps.clear();
      for (const auto& item : detail::split_list(text)) c.ps.push_back(parse_number<double>(key, item));
    } else if (key == "lambda") {
      c.lambda_list.clear();
      for (const auto& item : detail::split_list(text)) c.lambda_list.push_back(parse_number<double>(key, item));
    } else if (key == "lambda_min") {
      c.lambda_min = parse_number<double>(key, text);
    } else if (key == "lambda_max") {
      c.lambda_max = parse_number<double>(key, text);
    } else if (key == "grid.min_n") {
      c.policy.min_n = parse_number<std::size_t>(key, text);
    } else if (key == "grid.oversample") {
      c.policy.oversample = parse_number<double>(key, text);
    } else if (key == "grid.degree_factor") {
      c.policy.degree_factor = parse_number<std::size_t>(key, text);
    } else if (key == "grid.max_doublings") {
      c.policy.max_doublings = parse_number<int>(key, text);
    } else if (key == "grid.max_points") {
      c.policy.max_points = parse_number<std::size_t>(key, text);
    } else if (key == "grid.annulus_tolerance") {
      c.policy.annulus_tolerance = parse_number<double>(key, text);
    } else if (key == "grid.fixed_n") {
      c.policy.fixed_n = parse_number<std::size_t>(key, text);
    } else if (key == "grid.factored") {
      c.policy.allow_factored = detail::parse_bool(key, text);
    } else if (key == "discard_prefix") {
      if (text != "auto") c.discard_prefix = parse_number<std::size_t>(key, text);
    } else if (key == "certificates") {
      c.certificates = detail::parse_bool(key, text);
    } else if (key == "samples") {
      c.samples = parse_number<std::size_t>(key, text);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, text);
    } else if (key == "workers") {
      c.workers = parse_number<unsigned>(key, text);
    } else if (key == "cache_dir") {
      c.cache_dir = text;
    } else if (key == "format") {
      if (text != "csv" && text != "json") throw ConfigError("format must be csv or json, got '" + text + "'");
      c.format = text;
    } else if (key == "output") {
      c.output = text;
    } else if (key == "plot_dir") {
      c.plot_dir = text;
    }
  }
  if (c.ps.empty()) throw ConfigError("p list is empty");
  if (c.lambda_list.empty() && !(c.lambda_min > 0.0 && c.lambda_min <= c.lambda_max)) {
    throw ConfigError("need 0 < lambda_min <= lambda_max");
  }
  if (c.policy.fixed_n != 0 && !is_power_of_two(c.policy.fixed_n)) {
    throw ConfigError("grid.fixed_n must be a power of two");
  }
  try {
    c.phase();
    c.plan().validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace apnorm
