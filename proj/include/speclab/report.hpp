#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "speclab/config.hpp"
#include "speclab/errors.hpp"
#include "speclab/fit.hpp"
#include "speclab/rng.hpp"

namespace speclab {

/// One CSV row. Per-study meaning of the aux columns:
///   spectral:   aux1 = eigenvalue-identity diagnostic (relative), aux2 = mean degree
///   poisson:    aux1 = solver relative residual,        aux2 = mean degree
///   extension:  aux1 = coverage miss fraction,          aux2 = coverage flag (0/1)
///   hminus1:    aux1 = dual-norm ratio exact/multiscale, aux2 = variational violations
///   plugin:     aux1 = kde bandwidth,                   aux2 = |lambda error|
///   lowerbound: n holds m; l2_err = KL, h1_err = chi2 bound, E_l = separation,
///               aux1 = chi2 - KL, aux2 = grid resolution
struct CsvRow {
  std::string run_id;
  std::string study;
  std::size_t n = 0;
  double eps = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double lambda_rel_err = 0.0;
  double l2_err = 0.0;
  double h1_err = 0.0;
  double e_l = 0.0;
  double aux1 = 0.0;
  double aux2 = 0.0;
  double wall_ms = 0.0;
};

inline std::string csv_header() {
  return "run_id,study,n,eps,trial,seed,lambda_rel_err,l2_err,h1_err,E_l,aux1,aux2,wall_ms";
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string to_csv(const CsvRow& r) {
  std::string s;
  s += r.run_id + ',' + r.study + ',' + std::to_string(r.n) + ',' + format_double(r.eps) + ',' +
       std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' +
       format_double(r.lambda_rel_err) + ',' + format_double(r.l2_err) + ',' +
       format_double(r.h1_err) + ',' + format_double(r.e_l) + ',' + format_double(r.aux1) + ',' +
       format_double(r.aux2) + ',' + format_double(r.wall_ms);
  return s;
}

/// Config echo plus a stable run id (hash of the echo).
inline nlohmann::json config_echo(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["study"] = study_name(cfg.study);
  j["manifold"] = cfg.manifold;
  j["density"] = cfg.density;
  j["kernel"] = cfg.kernel;
  j["l"] = cfg.l;
  j["n_list"] = cfg.n_list;
  j["trials"] = cfg.trials;
  j["eps_const"] = cfg.effective_eps_const();
  j["seed"] = cfg.seed;
  j["mc_points"] = cfg.mc_points;
  j["out_dir"] = cfg.out_dir;
  j["eps_list"] = cfg.eps_list;
  j["m_list"] = cfg.m_list;
  j["grid_n"] = cfg.default_grid_n();
  j["c_bw"] = cfg.c_bw;
  return j;
}

inline std::string run_id_for(const ExperimentConfig& cfg) {
  const std::string echo = config_echo(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL ^ cfg.seed;
  for (char c : echo) h = CounterRng::mix(h ^ static_cast<unsigned char>(c));
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Writes content to path atomically (temp file then rename).
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericalError("write_atomic: cannot open " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

struct StudyReport {
  std::vector<CsvRow> rows;
  nlohmann::json json;

  void write(const std::string& out_dir, const std::string& study) const {
    std::string csv = csv_header() + '\n';
    for (const auto& r : rows) csv += to_csv(r) + '\n';
    write_atomic(std::filesystem::path(out_dir) / (study + ".csv"), csv);
    write_atomic(std::filesystem::path(out_dir) / (study + ".json"), json.dump(2) + "\n");
  }
};

inline nlohmann::json fit_json(const LogLogFit& f) {
  return nlohmann::json{{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
}

}  // namespace speclab
