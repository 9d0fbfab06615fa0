#pragma once

// File formats: Scenario and ThresholdRecord as JSON, PdCurve as CSV,
// oracle reports as JSON lines.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsdetect/detectors.hpp"
#include "rsdetect/error.hpp"
#include "rsdetect/montecarlo.hpp"
#include "rsdetect/oracle.hpp"
#include "rsdetect/scenario.hpp"

namespace rsdetect {

using json = nlohmann::json;

inline void to_json(json& j, const Scenario& s) {
  j = json{{"N", s.N},
           {"K_P", s.K_P},
           {"K_S", s.K_S},
           {"sigma_f", s.sigma_f},
           {"noise_db_below_clutter", s.noise_db_below_clutter},
           {"f_d", s.f_d},
           {"delta", s.delta},
           {"snr_db", s.snr_db}};
}

/// Missing keys keep their current value, so a partial object overlays defaults.
inline void from_json(const json& j, Scenario& s) {
  static const char* const known[] = {"N", "K_P", "K_S", "sigma_f", "noise_db_below_clutter", "f_d", "delta", "snr_db"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error(ErrorCode::Config, "unknown scenario field '" + key + "'");
  }
  if (j.contains("N")) s.N = j.at("N").get<int>();
  if (j.contains("K_P")) s.K_P = j.at("K_P").get<int>();
  if (j.contains("K_S")) s.K_S = j.at("K_S").get<int>();
  if (j.contains("sigma_f")) s.sigma_f = j.at("sigma_f").get<double>();
  if (j.contains("noise_db_below_clutter")) s.noise_db_below_clutter = j.at("noise_db_below_clutter").get<double>();
  if (j.contains("f_d")) s.f_d = j.at("f_d").get<double>();
  if (j.contains("delta")) s.delta = j.at("delta").get<double>();
  if (j.contains("snr_db")) s.snr_db = j.at("snr_db").get<double>();
}

inline void to_json(json& j, const ThresholdRecord& r) {
  j = json{{"detector", r.detector.label()},  {"scenario_digest", r.scenario_digest},
           {"pfa_target", r.pfa_target},      {"threshold", r.threshold},
           {"n_trials", r.n_trials},          {"master_seed", r.master_seed}};
}

inline void from_json(const json& j, ThresholdRecord& r) {
  r.detector = DetectorKind::parse(j.at("detector").get<std::string>());
  r.scenario_digest = j.at("scenario_digest").get<std::string>();
  r.pfa_target = j.at("pfa_target").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.n_trials = j.at("n_trials").get<std::int64_t>();
  r.master_seed = j.at("master_seed").get<std::uint64_t>();
}

inline void to_json(json& j, const CfarReport& r) {
  j = json{{"detector", r.detector.label()},
           {"pfa_target", r.pfa_target},
           {"threshold", r.threshold},
           {"empirical_pfa", r.empirical_pfa},
           {"n_trials", r.n_trials},
           {"standard_error", r.standard_error},
           {"pass", r.pass}};
}

namespace oracle {
inline void to_json(json& j, const OracleReport& r) {
  j = json{{"instance_seed", r.instance_seed},
           {"check", r.check},
           {"closed_form_value", r.closed_form_value},
           {"brute_force_value", r.brute_force_value},
           {"gap", r.gap},
           {"tolerance", r.tolerance},
           {"pass", r.pass}};
}
}  // namespace oracle

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Config, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::Config, "write failed for " + path);
}

/// Thresholds file: a JSON array of records (a bare object is also accepted).
inline std::string thresholds_to_json(const std::vector<ThresholdRecord>& records) {
  return json(records).dump(2) + "\n";
}

inline std::vector<ThresholdRecord> load_thresholds(const std::string& path) {
  const json j = read_json_file(path);
  try {
    if (j.is_array()) return j.get<std::vector<ThresholdRecord>>();
    return {j.get<ThresholdRecord>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// P_d CSV

inline constexpr const char* kPdCsvHeader = "snr_db,detector,pd,ci_halfwidth,cos2_theta,n_trials,seed";

struct PdCsvRow {
  double snr_db = 0.0;
  std::string detector;
  double pd = 0.0;
  double ci_halfwidth = 0.0;
  double cos2_theta = 0.0;
  std::int64_t n_trials = 0;
  std::uint64_t seed = 0;
};

/// One row per detector x SNR point, detector-major.
inline std::string pd_curves_to_csv(const std::vector<PdCurve>& curves) {
  std::string out = std::string(kPdCsvHeader) + "\n";
  char buf[256];
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.snr_grid_db.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.10g,%s,%.12g,%.12g,%.12g,%lld,%llu\n", c.snr_grid_db[i], c.detector.label().c_str(),
                    c.pd[i], c.ci_halfwidth[i], c.cos2_theta, static_cast<long long>(c.n_trials),
                    static_cast<unsigned long long>(c.seed));
      out += buf;
    }
  return out;
}

inline std::vector<PdCsvRow> parse_pd_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kPdCsvHeader) throw Error(ErrorCode::Config, "unexpected P_d CSV header");
  std::vector<PdCsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw Error(ErrorCode::Config, "malformed P_d CSV row: " + line);
    try {
      rows.push_back({std::stod(cells[0]), cells[1], std::stod(cells[2]), std::stod(cells[3]), std::stod(cells[4]),
                      std::stoll(cells[5]), std::stoull(cells[6])});
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, "malformed P_d CSV row: " + line);
    }
  }
  return rows;
}

inline std::string oracle_reports_to_jsonl(const std::vector<oracle::OracleReport>& reports) {
  std::string out;
  for (const auto& r : reports) out += json(r).dump() + "\n";
  return out;
}

}  // namespace rsdetect
