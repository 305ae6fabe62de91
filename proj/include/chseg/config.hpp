#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chseg/error.hpp"
#include "chseg/pipeline.hpp"

namespace chseg {

/// Malformed or unknown configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::vector<std::string> inputs;  // files, directories or glob patterns
  std::string gt_dir;
  std::string out_dir = "out";
  std::size_t size = 256;  // 0 keeps each image's own size
  PipelineParams pipeline;
  std::optional<double> sigma;  // absent means no noise
  std::uint64_t seed = 0;
  int workers = 1;
  bool trace = false;
  int count = 10;  // bench only

  void validate() const {
    try {
      pipeline.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (sigma && !(*sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (count < 1) throw ConfigError("count must be >= 1");
    if (size != 0 && size < 4) throw ConfigError("size must be 0 or >= 4");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    if (!v.empty() && v[0] != '-') out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("'" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(parse_int(key, trim(item))));
  if (out.empty()) throw ConfigError("'" + key + "' expects a comma-separated list");
  return out;
}

inline std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["epsilon"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.model.epsilon = parse_real(k, v); };
    t["lambda"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.model.lambda = parse_real(k, v); };
    t["mu"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.model.mu = parse_real(k, v); };
    t["beta"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.model.beta = parse_real(k, v); };
    t["delta"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.model.delta = parse_real(k, v); };
    t["dt"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.model.dt = parse_real(k, v); };
    t["tol"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.model.tol = parse_real(k, v); };
    t["n_max"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.model.n_max = static_cast<int>(parse_int(k, v)); };
    t["f_blocks"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.f_blocks = static_cast<int>(parse_int(k, v)); };
    t["spacing"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.spacing = parse_real(k, v); };

    t["t_epsilon"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.tfpm.epsilon = parse_real(k, v); };
    t["t_lambda"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.tfpm.lambda = parse_real(k, v); };
    t["tau"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.tfpm.tau = parse_real(k, v); };
    t["h"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.tfpm.h = parse_real(k, v); };
    t["t_tol"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.tfpm.tol = parse_real(k, v); };
    t["t_delta"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.tfpm.delta = parse_real(k, v); };
    t["n_steps"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.tfpm.n_steps = static_cast<int>(parse_int(k, v)); };
    t["t_blocks"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.tfpm.n_blocks = static_cast<int>(parse_int(k, v)); };
    t["bicgstab_caps"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.tfpm.bicgstab_max_iters = parse_int_list(k, v); };

    t["stability_K"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.stability.K = parse_real(k, v); };
    t["stability_gamma"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.stability.gamma = parse_real(k, v); };
    t["stability_C1"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.stability.c1 = parse_real(k, v); };

    t["threshold"] = [](RunConfig& c, auto& k, auto& v) { c.pipeline.threshold = parse_real(k, v); };
    t["size"] = [](RunConfig& c, auto& k, auto& v) {
      const long long n = parse_int(k, v);
      if (n < 0) throw ConfigError("size must be >= 0");
      c.size = static_cast<std::size_t>(n);
    };
    t["sigma"] = [](RunConfig& c, auto& k, auto& v) { c.sigma = parse_real(k, v); };
    t["seed"] = [](RunConfig& c, auto& k, auto& v) { c.seed = parse_u64(k, v); };
    t["workers"] = [](RunConfig& c, auto& k, auto& v) { c.workers = static_cast<int>(parse_int(k, v)); };
    t["trace"] = [](RunConfig& c, auto& k, auto& v) { c.trace = parse_bool(k, v); };
    t["count"] = [](RunConfig& c, auto& k, auto& v) { c.count = static_cast<int>(parse_int(k, v)); };
    t["input"] = [](RunConfig& c, auto&, auto& v) { c.inputs.push_back(v); };
    t["gt"] = [](RunConfig& c, auto&, auto& v) { c.gt_dir = v; };
    t["out"] = [](RunConfig& c, auto&, auto& v) { c.out_dir = v; };
    return t;
  }();
  return table;
}

}  // namespace detail

/// Sets one key. Unknown keys and malformed values raise ConfigError.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = detail::setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second(cfg, key, value);
}

/// Grammar, one entry per line:
///   key = value      # trailing comments allowed
/// Blank lines and lines starting with '#' are skipped. `input` may repeat;
/// every other key keeps its last value. Lists are comma-separated.
inline void parse_config(std::istream& in, RunConfig& cfg, const std::string& origin = "<config>") {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": missing key");
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  parse_config(in, cfg, path.string());
  return cfg;
}

/// Every key with its resolved value, in the grammar parse_config reads.
/// Reals are printed with 17 significant digits so the round trip is exact.
inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  using detail::fmt_real;
  const auto& m = c.pipeline.model;
  const auto& t = c.pipeline.tfpm;
  const auto& s = c.pipeline.stability;
  std::string caps;
  for (std::size_t k = 0; k < t.bicgstab_max_iters.size(); ++k) {
    if (k) caps += ",";
    caps += std::to_string(t.bicgstab_max_iters[k]);
  }
  std::vector<std::pair<std::string, std::string>> e{
      {"epsilon", fmt_real(m.epsilon)},
      {"lambda", fmt_real(m.lambda)},
      {"mu", fmt_real(m.mu)},
      {"beta", fmt_real(m.beta)},
      {"delta", fmt_real(m.delta)},
      {"dt", fmt_real(m.dt)},
      {"tol", fmt_real(m.tol)},
      {"n_max", std::to_string(m.n_max)},
      {"f_blocks", std::to_string(c.pipeline.f_blocks)},
      {"spacing", fmt_real(c.pipeline.spacing)},
      {"t_epsilon", fmt_real(t.epsilon)},
      {"t_lambda", fmt_real(t.lambda)},
      {"tau", fmt_real(t.tau)},
      {"h", fmt_real(t.h)},
      {"t_tol", fmt_real(t.tol)},
      {"t_delta", fmt_real(t.delta)},
      {"n_steps", std::to_string(t.n_steps)},
      {"t_blocks", std::to_string(t.n_blocks)},
      {"bicgstab_caps", caps},
      {"stability_K", fmt_real(s.K)},
      {"stability_gamma", fmt_real(s.gamma)},
      {"stability_C1", fmt_real(s.c1)},
      {"threshold", fmt_real(c.pipeline.threshold)},
      {"size", std::to_string(c.size)},
      {"seed", std::to_string(c.seed)},
      {"workers", std::to_string(c.workers)},
      {"trace", c.trace ? "true" : "false"},
      {"count", std::to_string(c.count)},
      {"out", c.out_dir},
  };
  if (c.sigma) e.emplace_back("sigma", fmt_real(*c.sigma));
  if (!c.gt_dir.empty()) e.emplace_back("gt", c.gt_dir);
  for (const auto& in : c.inputs) e.emplace_back("input", in);
  return e;
}

inline void write_config(std::ostream& os, const RunConfig& c) {
  for (const auto& [k, v] : config_entries(c)) os << k << " = " << v << '\n';
}

}  // namespace chseg
