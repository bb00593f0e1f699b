#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "speclab/errors.hpp"

namespace speclab {

inline constexpr const char* kVersion = "speclab 0.1.0";

enum class Study { Spectral, Poisson, Extension, Hminus1, Plugin, Lowerbound };

inline Study parse_study(const std::string& s) {
  if (s == "spectral") return Study::Spectral;
  if (s == "poisson") return Study::Poisson;
  if (s == "extension") return Study::Extension;
  if (s == "hminus1") return Study::Hminus1;
  if (s == "plugin") return Study::Plugin;
  if (s == "lowerbound") return Study::Lowerbound;
  throw ConfigError("unknown study '" + s + "'");
}

inline std::string study_name(Study s) {
  switch (s) {
    case Study::Spectral: return "spectral";
    case Study::Poisson: return "poisson";
    case Study::Extension: return "extension";
    case Study::Hminus1: return "hminus1";
    case Study::Plugin: return "plugin";
    case Study::Lowerbound: return "lowerbound";
  }
  return "?";
}

/// Experiment description. File form is `key = value` per line; keys match
/// the field names below, `#` starts a comment, unknown keys are errors.
struct ExperimentConfig {
  Study study = Study::Spectral;
  std::string manifold = "torus2";
  std::string density = "uniform";  // uniform | bump:m=<int>:<plus|minus|alt>
  std::string kernel = "tent";
  std::size_t l = 2;
  std::vector<std::size_t> n_list = {1000, 2000, 4000, 8000, 16000};
  std::size_t trials = 10;
  double eps_const = 0.0;  // 0: per-manifold default (1.5 torus, 2.0 sphere)
  std::uint64_t seed = 42;
  std::size_t mc_points = 50000;
  std::string out_dir = "out";
  std::vector<double> eps_list;            // poisson / hminus1 sweeps
  std::vector<int> m_list = {4, 8, 16};    // lowerbound family sizes
  int grid_n = 0;                          // 0: per-study default
  double c_bw = 0.3;                       // plug-in bandwidth constant
  int only_trial = -1;                     // replay hook (not a file key)

  double effective_eps_const() const {
    if (eps_const > 0.0) return eps_const;
    return manifold == "sphere2" ? 2.0 : 1.5;
  }

  int default_grid_n() const {
    if (grid_n > 0) return grid_n;
    return study == Study::Plugin ? 1024 : 2048;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
  try {
    if (key == "study") {
      cfg.study = parse_study(value);
    } else if (key == "manifold") {
      cfg.manifold = value;
    } else if (key == "density") {
      cfg.density = value;
    } else if (key == "kernel") {
      cfg.kernel = value;
    } else if (key == "l") {
      cfg.l = std::stoul(value);
    } else if (key == "n_list") {
      cfg.n_list.clear();
      for (const auto& tok : detail::split_csv(value)) cfg.n_list.push_back(std::stoul(tok));
    } else if (key == "trials") {
      cfg.trials = std::stoul(value);
    } else if (key == "eps_const") {
      cfg.eps_const = std::stod(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "mc_points") {
      cfg.mc_points = std::stoul(value);
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "eps_list") {
      cfg.eps_list.clear();
      for (const auto& tok : detail::split_csv(value)) cfg.eps_list.push_back(std::stod(tok));
    } else if (key == "m_list") {
      cfg.m_list.clear();
      for (const auto& tok : detail::split_csv(value)) cfg.m_list.push_back(std::stoi(tok));
    } else if (key == "grid_n") {
      cfg.grid_n = std::stoi(value);
    } else if (key == "c_bw") {
      cfg.c_bw = std::stod(value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key '" + key + "': bad value '" + value + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("config key '" + key + "': value out of range '" + value + "'");
  }
}

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.n_list.empty()) throw ConfigError("n_list must be nonempty");
  for (std::size_t i = 1; i < cfg.n_list.size(); ++i)
    if (cfg.n_list[i] <= cfg.n_list[i - 1])
      throw ConfigError("n_list must be strictly increasing");
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (cfg.l < 1) throw ConfigError("l must be >= 1");
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_config_entry(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  validate(cfg);
  return cfg;
}

}  // namespace speclab
