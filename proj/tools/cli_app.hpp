#pragma once

// Command-line front end. Parsing and execution live here so the tests can
// drive run() without spawning processes.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rsdetect/io.hpp"
#include "rsdetect/rsdetect.hpp"

namespace rsdetect::cli {

enum class Command { Calibrate, PdCurve, CfarCheck, Compare, VerifyOracles };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Calibrate: return "calibrate";
    case Command::PdCurve: return "pd-curve";
    case Command::CfarCheck: return "cfar-check";
    case Command::Compare: return "compare";
    case Command::VerifyOracles: return "verify-oracles";
  }
  return "?";
}

inline Command parse_command(const std::string& s) {
  for (Command c : {Command::Calibrate, Command::PdCurve, Command::CfarCheck, Command::Compare, Command::VerifyOracles})
    if (s == to_string(c)) return c;
  throw Error(ErrorCode::Config, "unknown command '" + s + "'");
}

/// Exit statuses, one per error category.
enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kStaleThreshold = 3,
  kOracleFailure = 4,
  kCheckFailed = 5,
  kNumerical = 6,
  kInvalidComparison = 7,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::InvalidInput: return kConfig;
    case ErrorCode::StaleThreshold: return kStaleThreshold;
    case ErrorCode::OracleFailure: return kOracleFailure;
    case ErrorCode::InvalidComparison: return kInvalidComparison;
    case ErrorCode::SingularMatrix:
    case ErrorCode::NotPositiveSemidefinite:
    case ErrorCode::UndefinedStatistic: return kNumerical;
  }
  return kInternal;
}

struct SnrSpec {
  double start_db = 5.0;
  double stop_db = 30.0;
  double step_db = 1.0;
};

inline SnrSpec parse_snr(const std::string& text) {
  SnrSpec s;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &s.start_db, &s.stop_db, &s.step_db, &tail) != 3)
    throw Error(ErrorCode::Config, "--snr expects start:stop:step, got '" + text + "'");
  return s;
}

struct RunConfig {
  Command command = Command::Calibrate;
  Scenario scenario;
  std::vector<DetectorKind> detectors;  // empty: all five
  double epsilon = 0.2;
  double pfa = 1e-3;
  std::int64_t trials_h0 = 100000;
  std::int64_t trials_h1 = 1000;
  std::optional<SnrSpec> snr;  // unset: 5:30:1 matched, 10:35:1 mismatched
  std::uint64_t seed = 1;
  std::string out_path;  // empty: per-command default; "-" for stdout
  std::string threshold_path;
  bool allow_short_run = false;
  AmplitudeSplit split = AmplitudeSplit::Equal;
  int oracle_instances = 200;

  void validate() const {
    scenario.validate();
    if (!(pfa > 0.0 && pfa < 0.5)) throw Error(ErrorCode::Config, "pfa must lie in (0, 0.5)");
    if (!(epsilon >= 0.0)) throw Error(ErrorCode::Config, "epsilon must be >= 0");
    if (trials_h0 < 1 || trials_h1 < 1) throw Error(ErrorCode::Config, "trial counts must be positive");
    if (oracle_instances < 1) throw Error(ErrorCode::Config, "oracle instance count must be positive");
    const SnrSpec g = snr_spec();
    if (!(g.step_db > 0.0) || g.stop_db < g.start_db) throw Error(ErrorCode::Config, "invalid SNR grid");
  }

  SnrSpec snr_spec() const {
    if (snr) return *snr;
    return scenario.delta == 0.0 ? SnrSpec{5, 30, 1} : SnrSpec{10, 35, 1};
  }

  std::vector<DetectorKind> detector_set() const {
    return detectors.empty() || command == Command::Compare ? all_detectors(epsilon) : detectors;
  }

  std::string output() const {
    if (!out_path.empty()) return out_path;
    switch (command) {
      case Command::Calibrate: return "thresholds.json";
      case Command::PdCurve: return "pd_curve.csv";
      case Command::CfarCheck: return "cfar_report.json";
      case Command::Compare: return "compare.csv";
      case Command::VerifyOracles: return "oracles.jsonl";
    }
    return "out";
  }
};

/// As DetectorKind::parse, with a bare "parametric" taking the configured epsilon.
inline DetectorKind parse_detector(const std::string& text, double epsilon) {
  std::string lower = text;
  for (char& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return lower == "parametric" ? DetectorKind::parametric(epsilon) : DetectorKind::parse(text);
}

// ---------------------------------------------------------------------------
// Config file

inline void apply_json(const json& j, RunConfig& c) {
  static const char* const known[] = {"command", "scenario",        "detectors", "epsilon",         "pfa",
                                      "trials_h0", "trials_h1",     "snr_grid",  "seed",            "out_path",
                                      "threshold_path", "allow_short_run", "split", "oracle_instances"};
  if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; }))
      throw Error(ErrorCode::Config, "unknown config field '" + key + "'");
  try {
    if (j.contains("command")) c.command = parse_command(j["command"].get<std::string>());
    if (j.contains("scenario")) j["scenario"].get_to(c.scenario);
    if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("detectors")) {
      c.detectors.clear();
      for (const auto& d : j["detectors"]) c.detectors.push_back(parse_detector(d.get<std::string>(), c.epsilon));
    }
    if (j.contains("pfa")) c.pfa = j["pfa"].get<double>();
    if (j.contains("trials_h0")) c.trials_h0 = j["trials_h0"].get<std::int64_t>();
    if (j.contains("trials_h1")) c.trials_h1 = j["trials_h1"].get<std::int64_t>();
    if (j.contains("snr_grid")) {
      const auto& g = j["snr_grid"];
      if (g.is_string())
        c.snr = parse_snr(g.get<std::string>());
      else
        c.snr = SnrSpec{g.at("start_db").get<double>(), g.at("stop_db").get<double>(), g.at("step_db").get<double>()};
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out_path")) c.out_path = j["out_path"].get<std::string>();
    if (j.contains("threshold_path")) c.threshold_path = j["threshold_path"].get<std::string>();
    if (j.contains("allow_short_run")) c.allow_short_run = j["allow_short_run"].get<bool>();
    if (j.contains("split")) {
      const auto s = j["split"].get<std::string>();
      if (s != "equal" && s != "single") throw Error(ErrorCode::Config, "split must be 'equal' or 'single'");
      c.split = s == "equal" ? AmplitudeSplit::Equal : AmplitudeSplit::SingleCell;
    }
    if (j.contains("oracle_instances")) c.oracle_instances = j["oracle_instances"].get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Argument parsing: defaults < config file < flags

struct ParseResult {
  RunConfig config;
  bool exit_now = false;  // --help and friends
  int exit_code = kOk;
  std::string message;
};

inline ParseResult parse_args(int argc, const char* const* argv) {
  CLI::App app{"Adaptive detection of range-spread targets: threshold calibration and P_d simulation"};
  std::optional<std::string> command, config_path, snr, out, thresholds, split;
  std::optional<int> n, kp, ks, instances;
  std::optional<double> sigma_f, fd, delta, epsilon, pfa;
  std::optional<std::int64_t> trials_h0, trials_h1;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> detectors;
  bool reference_protocol = false;
  bool allow_short = false;

  app.add_option("command", command, "calibrate | pd-curve | cfar-check | compare | verify-oracles");
  app.add_option("--config", config_path, "JSON file mirroring RunConfig");
  app.add_option("--n", n, "temporal samples N");
  app.add_option("--kp", kp, "primary cells K_P");
  app.add_option("--ks", ks, "secondary cells K_S");
  app.add_option("--sigma-f", sigma_f, "clutter spectral spread");
  app.add_option("--fd", fd, "nominal normalized Doppler");
  app.add_option("--delta", delta, "Doppler mismatch (0: matched)");
  app.add_option("--epsilon", epsilon, "epsilon of the parametric detector");
  app.add_option("--pfa", pfa, "target false-alarm probability");
  app.add_option("--trials-h0", trials_h0, "H0 trials for calibration and CFAR checks");
  app.add_option("--trials-h1", trials_h1, "H1 trials per SNR point");
  app.add_option("--snr", snr, "SNR grid start:stop:step in dB");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out, "output path ('-' for stdout)");
  app.add_option("--thresholds", thresholds, "ThresholdRecord JSON to reuse");
  app.add_option("--detector", detectors, "detector (repeatable): GLRT, Parametric(eps), GLRT-H, GAMF, GASD");
  app.add_option("--split", split, "amplitude split for H1: equal | single")->check(CLI::IsMember({"equal", "single"}));
  app.add_option("--instances", instances, "instances per oracle suite");
  app.add_flag("--reference-protocol", reference_protocol, "pfa 1e-4 with 1e6 calibration trials");
  app.add_flag("--allow-short-run", allow_short, "permit fewer than 100/pfa calibration trials");

  ParseResult res;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    res.exit_now = true;
    res.message = app.help();
    return res;
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorCode::Config, e.what());
  }

  RunConfig& c = res.config;
  if (config_path) apply_json(read_json_file(*config_path), c);
  if (reference_protocol) {
    c.pfa = 1e-4;
    c.trials_h0 = 1000000;
  }
  if (command) c.command = parse_command(*command);
  else if (!config_path) throw Error(ErrorCode::Config, "missing command");
  if (n) c.scenario.N = *n;
  if (kp) c.scenario.K_P = *kp;
  if (ks) c.scenario.K_S = *ks;
  if (sigma_f) c.scenario.sigma_f = *sigma_f;
  if (fd) c.scenario.f_d = *fd;
  if (delta) c.scenario.delta = *delta;
  if (epsilon) c.epsilon = *epsilon;
  if (pfa) c.pfa = *pfa;
  if (trials_h0) c.trials_h0 = *trials_h0;
  if (trials_h1) c.trials_h1 = *trials_h1;
  if (snr) c.snr = parse_snr(*snr);
  if (seed) c.seed = *seed;
  if (out) c.out_path = *out;
  if (thresholds) c.threshold_path = *thresholds;
  if (split) c.split = *split == "equal" ? AmplitudeSplit::Equal : AmplitudeSplit::SingleCell;
  if (instances) c.oracle_instances = *instances;
  if (allow_short) c.allow_short_run = true;
  if (!detectors.empty()) {
    c.detectors.clear();
    for (const auto& d : detectors) c.detectors.push_back(parse_detector(d, c.epsilon));
  }
  c.validate();
  return res;
}

// ---------------------------------------------------------------------------
// Commands

inline void emit(const std::string& path, const std::string& text) {
  if (path == "-")
    std::cout << text << std::flush;
  else
    write_text_file(path, text);
}

/// Thresholds for the requested detectors: loaded from file when given,
/// otherwise calibrated in-process.
inline std::vector<ThresholdRecord> obtain_thresholds(const RunConfig& c, const Experiment& ex, std::ostream& log) {
  const auto wanted = c.detector_set();
  if (c.threshold_path.empty()) {
    log << "calibrating " << wanted.size() << " detector(s) with " << c.trials_h0 << " H0 trials at pfa " << c.pfa << "\n";
    CalibrationOptions opt;
    opt.allow_short_run = c.allow_short_run;
    return calibrate_thresholds(ex, wanted, c.pfa, c.trials_h0, c.seed, opt);
  }
  const auto loaded = load_thresholds(c.threshold_path);
  const std::string digest = ex.digest();
  std::vector<ThresholdRecord> out;
  for (const auto& d : wanted) {
    auto it = std::find_if(loaded.begin(), loaded.end(), [&](const ThresholdRecord& r) { return r.detector == d; });
    if (it == loaded.end())
      throw Error(ErrorCode::Config, c.threshold_path + " has no threshold for " + d.label());
    if (it->scenario_digest != digest)
      throw Error(ErrorCode::StaleThreshold, "threshold for " + d.label() + " in " + c.threshold_path +
                                                 " was calibrated for another scenario (" + it->scenario_digest +
                                                 " vs " + digest + ")");
    out.push_back(*it);
  }
  return out;
}

inline std::vector<double> grid_of(const RunConfig& c) {
  const SnrSpec g = c.snr_spec();
  return snr_grid(g.start_db, g.stop_db, g.step_db);
}

/// Pairwise orderings at the first SNR where the best detector reaches 0.9
/// (the last grid point if none does).
inline std::string compare_summary(const std::vector<PdCurve>& curves, const Experiment& ex) {
  std::ostringstream s;
  const auto& grid = curves.front().snr_grid_db;
  std::size_t at = grid.size();
  std::size_t best = 0;
  for (std::size_t d = 0; d < curves.size(); ++d) {
    const std::size_t i = first_reaching(curves[d], 0.9);
    if (i < at) {
      at = i;
      best = d;
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "scenario %s  N=%d K_P=%d K_S=%d delta=%g cos2_theta=%.4f\n", ex.digest().c_str(),
                ex.scenario().N, ex.scenario().K_P, ex.scenario().K_S, ex.scenario().delta, ex.cos2());
  s << buf;
  if (at == grid.size()) {
    at = grid.size() - 1;
    std::snprintf(buf, sizeof buf, "no detector reaches pd 0.9; orderings at %.4g dB\n", grid[at]);
  } else {
    std::snprintf(buf, sizeof buf, "%s first reaches pd 0.9 at %.4g dB\n", curves[best].detector.label().c_str(),
                  grid[at]);
  }
  s << buf;
  std::vector<std::size_t> order(curves.size());
  for (std::size_t d = 0; d < order.size(); ++d) order[d] = d;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return curves[a].pd[at] > curves[b].pd[at]; });
  for (std::size_t d : order) {
    std::snprintf(buf, sizeof buf, "  %-18s pd=%.4f +/- %.4f\n", curves[d].detector.label().c_str(), curves[d].pd[at],
                  curves[d].ci_halfwidth[at]);
    s << buf;
  }
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& a = curves[order[i]];
      const auto& b = curves[order[j]];
      const double gap = a.pd[at] - b.pd[at];
      const char* rel = gap > std::hypot(a.ci_halfwidth[at], b.ci_halfwidth[at]) ? ">" : ">~";
      std::snprintf(buf, sizeof buf, "  %s %s %s by %.4f\n", a.detector.label().c_str(), rel, b.detector.label().c_str(),
                    gap);
      s << buf;
    }
  return s.str();
}

inline std::string summary_path(const std::string& csv_path) {
  if (csv_path == "-") return "-";
  const auto dot = csv_path.rfind('.');
  const auto slash = csv_path.find_last_of('/');
  const std::string stem = dot != std::string::npos && (slash == std::string::npos || dot > slash)
                               ? csv_path.substr(0, dot)
                               : csv_path;
  return stem + "_summary.txt";
}

inline int run(const RunConfig& c, std::ostream& log = std::cerr) {
  c.validate();
  const Experiment ex = Experiment::from_scenario(c.scenario);
  const std::string out = c.output();
  switch (c.command) {
    case Command::Calibrate: {
      const auto recs = obtain_thresholds(c, ex, log);
      emit(out, thresholds_to_json(recs));
      return kOk;
    }
    case Command::PdCurve:
    case Command::Compare: {
      const auto recs = obtain_thresholds(c, ex, log);
      const auto grid = grid_of(c);
      log << "estimating pd on " << grid.size() << " SNR points with " << c.trials_h1 << " H1 trials each\n";
      const auto curves = estimate_pd(ex, recs, grid, c.trials_h1, c.seed, c.split);
      emit(out, pd_curves_to_csv(curves));
      if (c.command == Command::Compare) {
        const std::string summary = compare_summary(curves, ex);
        emit(summary_path(out), summary);
        log << summary;
      }
      return kOk;
    }
    case Command::CfarCheck: {
      // thresholds from the configured scenario, verified under white noise
      const auto recs = obtain_thresholds(c, ex, log);
      const Experiment white =
          Experiment::with_covariance(c.scenario, ComplexMatrix::Identity(c.scenario.N, c.scenario.N));
      const auto reports = cfar_check(ex, white, recs, c.trials_h0, c.seed);
      bool ok = true;
      for (const auto& r : reports) {
        ok = ok && r.pass;
        log << r.detector.label() << ": empirical pfa " << r.empirical_pfa << " vs " << r.pfa_target << " ("
            << (r.pass ? "PASS" : "FAIL") << ")\n";
      }
      emit(out, json(reports).dump(2) + "\n");
      return ok ? kOk : kCheckFailed;
    }
    case Command::VerifyOracles: {
      auto reports = oracle::alpha_suite(c.oracle_instances, c.seed);
      const auto nu = oracle::nu_suite(c.oracle_instances, c.seed);
      reports.insert(reports.end(), nu.begin(), nu.end());
      emit(out, oracle_reports_to_jsonl(reports));
      const auto failed = std::count_if(reports.begin(), reports.end(), [](const auto& r) { return !r.pass; });
      log << reports.size() - static_cast<std::size_t>(failed) << "/" << reports.size() << " oracle checks passed\n";
      if (failed) throw Error(ErrorCode::OracleFailure, std::to_string(failed) + " oracle check(s) failed");
      return kOk;
    }
  }
  return kInternal;
}

/// Parse, run, and map errors to exit statuses.
inline int main_entry(int argc, const char* const* argv, std::ostream& log = std::cerr) {
  try {
    const ParseResult p = parse_args(argc, argv);
    if (p.exit_now) {
      std::cout << p.message;
      return p.exit_code;
    }
    return run(p.config, log);
  } catch (const Error& e) {
    log << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    log << "error [internal]: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace rsdetect::cli
