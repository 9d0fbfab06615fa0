#pragma once

// Monte Carlo counting: threshold calibration at a target false-alarm rate,
// detection-probability curves, and empirical CFAR checks.
//
// Every trial draws from its own stream seeded by (master seed, phase,
// trial index), and per-trial outputs are stored by index, so results do
// not depend on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "rsdetect/detectors.hpp"
#include "rsdetect/error.hpp"
#include "rsdetect/scenario.hpp"

namespace rsdetect {

inline constexpr const char* kWorkerEnv = "RSDETECT_MAX_WORKERS";

/// hardware_concurrency, capped by $RSDETECT_MAX_WORKERS when set.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv(kWorkerEnv)) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Calls body(i) for i in [0, n) across `workers` threads.
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned workers = worker_count()) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  constexpr std::size_t kChunk = 64;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::mutex failure_mutex;
  auto run = [&] {
    try {
      for (;;) {
        const std::size_t begin = next.fetch_add(kChunk);
        if (begin >= n || failed.load()) return;
        const std::size_t end = std::min(n, begin + kChunk);
        for (std::size_t i = begin; i < end; ++i) body(i);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      failed = true;
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Threshold calibration

struct ThresholdRecord {
  DetectorKind detector;
  std::string scenario_digest;
  double pfa_target = 0.0;
  double threshold = 0.0;  // log domain
  std::int64_t n_trials = 0;
  std::uint64_t master_seed = 0;
};

struct CalibrationOptions {
  /// Permit fewer than the 100/pfa trials of the standard protocol.
  bool allow_short_run = false;
  unsigned workers = 0;  // 0: worker_count()
};

inline void check_calibration_size(double pfa, std::int64_t n_trials, bool allow_short_run) {
  if (!(pfa > 0.0 && pfa < 1.0)) throw Error(ErrorCode::Config, "pfa must be in (0, 1)");
  if (static_cast<double>(n_trials) * pfa < 20.0)
    throw Error(ErrorCode::Config, "n_trials * pfa must be >= 20 (got " + std::to_string(n_trials * pfa) + ")");
  if (!allow_short_run && static_cast<double>(n_trials) * pfa < 100.0 * (1.0 - 1e-9))
    throw Error(ErrorCode::Config, "n_trials must be >= 100/pfa; set allow_short_run to override");
}

/// Midpoint of the k-th and (k+1)-th largest statistics, k = round(n pfa).
inline double threshold_from_statistics(std::vector<double> stats, double pfa) {
  const auto n = stats.size();
  const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * pfa));
  if (k < 1 || k >= n) throw Error(ErrorCode::Config, "pfa * n_trials must lie in [1, n_trials)");
  for (double s : stats)
    if (std::isnan(s)) throw Error(ErrorCode::InvalidInput, "NaN in the H0 statistic stream");
  std::sort(stats.begin(), stats.end(), std::greater<>());
  return 0.5 * (stats[k - 1] + stats[k]);
}

/// Calibration against an arbitrary statistic source; source(engine) is
/// called once per trial with that trial's engine.
template <class Source>
double calibrate_with_source(Source&& source, double pfa, std::int64_t n_trials, std::uint64_t master_seed,
                             unsigned workers = 0) {
  check_calibration_size(pfa, n_trials, true);
  std::vector<double> stats(static_cast<std::size_t>(n_trials));
  parallel_for(
      stats.size(),
      [&](std::size_t t) {
        Engine engine = trial_engine(master_seed, Stream::Calibration, t);
        stats[t] = source(engine);
      },
      workers ? workers : worker_count());
  return threshold_from_statistics(std::move(stats), pfa);
}

/// H0 statistics of several detectors on shared trials; result[d][t].
inline std::vector<std::vector<double>> h0_statistics(const Experiment& ex, const std::vector<DetectorKind>& detectors,
                                                      std::int64_t n_trials, std::uint64_t master_seed, Stream stream,
                                                      unsigned workers = 0) {
  std::vector<std::vector<double>> stats(detectors.size(), std::vector<double>(static_cast<std::size_t>(n_trials)));
  const int ks = ex.scenario().K_S;
  parallel_for(
      static_cast<std::size_t>(n_trials),
      [&](std::size_t t) {
        Engine engine = trial_engine(master_seed, stream, t);
        NoiseDraw d = draw_noise(ex, engine);
        const auto values = evaluate_many(detectors, whiten(d.primary, d.S, ex.nominal_steering()), ks);
        for (std::size_t i = 0; i < detectors.size(); ++i) stats[i][t] = values[i];
      },
      workers ? workers : worker_count());
  return stats;
}

/// Per-detector thresholds. A detector's threshold depends only on its own
/// statistics, so batching detectors gives the same result as calibrating
/// each one alone with the same seed.
inline std::vector<ThresholdRecord> calibrate_thresholds(const Experiment& ex,
                                                         const std::vector<DetectorKind>& detectors, double pfa,
                                                         std::int64_t n_trials, std::uint64_t master_seed,
                                                         const CalibrationOptions& opt = {}) {
  check_calibration_size(pfa, n_trials, opt.allow_short_run);
  auto stats = h0_statistics(ex, detectors, n_trials, master_seed, Stream::Calibration, opt.workers);
  std::vector<ThresholdRecord> out;
  const std::string digest = ex.digest();
  for (std::size_t i = 0; i < detectors.size(); ++i)
    out.push_back({detectors[i], digest, pfa, threshold_from_statistics(std::move(stats[i]), pfa), n_trials,
                   master_seed});
  return out;
}

inline ThresholdRecord calibrate_threshold(const DetectorKind& detector, const Experiment& ex, double pfa,
                                           std::int64_t n_trials, std::uint64_t master_seed,
                                           const CalibrationOptions& opt = {}) {
  return calibrate_thresholds(ex, {detector}, pfa, n_trials, master_seed, opt).front();
}

struct RateEstimate {
  std::int64_t hits = 0;
  std::int64_t n_trials = 0;

  double rate() const { return n_trials ? static_cast<double>(hits) / static_cast<double>(n_trials) : 0.0; }
};

/// sqrt(p (1-p) / n)
inline double binomial_se(double p, std::int64_t n) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

/// Exceedance counts (strict >) of H0 statistics; one entry per record.
inline std::vector<RateEstimate> measure_pfa(const Experiment& ex, const std::vector<ThresholdRecord>& records,
                                             std::int64_t n_trials, std::uint64_t master_seed,
                                             Stream stream = Stream::Verification, unsigned workers = 0) {
  std::vector<DetectorKind> detectors;
  for (const auto& r : records) detectors.push_back(r.detector);
  const auto stats = h0_statistics(ex, detectors, n_trials, master_seed, stream, workers);
  std::vector<RateEstimate> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    RateEstimate e{0, n_trials};
    for (double s : stats[i])
      if (s > records[i].threshold) ++e.hits;
    out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detection probability

struct PdCurve {
  DetectorKind detector;
  std::vector<double> snr_grid_db;
  std::vector<double> pd;
  std::vector<double> ci_halfwidth;  // 95%, normal approximation
  std::int64_t n_trials = 0;
  double cos2_theta = 1.0;
  std::uint64_t seed = 0;

  double lower(std::size_t i) const { return std::max(0.0, pd[i] - ci_halfwidth[i]); }
  double upper(std::size_t i) const { return std::min(1.0, pd[i] + ci_halfwidth[i]); }
};

/// 1.96 max(sqrt(p(1-p)/n), 1/n)
inline double pd_ci_halfwidth(double p, std::int64_t n) {
  return 1.96 * std::max(binomial_se(p, n), 1.0 / static_cast<double>(n));
}

enum class AmplitudeSplit { Equal, SingleCell };

/// start, start+step, ... up to stop inclusive (with a small tolerance).
inline std::vector<double> snr_grid(double start_db, double stop_db, double step_db) {
  if (!(step_db > 0.0) || stop_db < start_db) throw Error(ErrorCode::Config, "invalid SNR grid");
  std::vector<double> out;
  const auto count = static_cast<std::int64_t>(std::floor((stop_db - start_db) / step_db + 1e-9));
  for (std::int64_t i = 0; i <= count; ++i) out.push_back(start_db + static_cast<double>(i) * step_db);
  return out;
}

/// P_d curves for several calibrated detectors with common random numbers:
/// trial t uses the same noise for every detector and every SNR point.
inline std::vector<PdCurve> estimate_pd(const Experiment& ex, const std::vector<ThresholdRecord>& records,
                                        const std::vector<double>& snr_grid_db, std::int64_t n_trials,
                                        std::uint64_t master_seed, AmplitudeSplit split = AmplitudeSplit::Equal,
                                        unsigned workers = 0) {
  if (n_trials < 1) throw Error(ErrorCode::Config, "n_trials must be positive");
  const std::string digest = ex.digest();
  std::vector<DetectorKind> detectors;
  for (const auto& r : records) {
    if (r.scenario_digest != digest)
      throw Error(ErrorCode::StaleThreshold, "threshold for " + r.detector.label() + " was calibrated for scenario " +
                                                 r.scenario_digest + ", current scenario is " + digest);
    detectors.push_back(r.detector);
  }
  const auto& sc = ex.scenario();
  std::vector<AmplitudeVector> amps;
  for (double snr : snr_grid_db)
    amps.push_back(split == AmplitudeSplit::Equal ? ex.amplitudes(snr)
                                                  : single_cell_amplitudes(sc.K_P, snr, ex.actual_energy()));

  const std::size_t n_snr = snr_grid_db.size();
  const std::size_t n_det = detectors.size();
  // hits[t][snr * n_det + d]
  std::vector<std::vector<std::uint8_t>> hits(static_cast<std::size_t>(n_trials));
  parallel_for(
      hits.size(),
      [&](std::size_t t) {
        Engine engine = trial_engine(master_seed, Stream::Detection, t);
        const NoiseDraw noise = draw_noise(ex, engine);
        auto& row = hits[t];
        row.assign(n_snr * n_det, 0);
        for (std::size_t s = 0; s < n_snr; ++s) {
          const ComplexMatrix z = add_signal(noise.primary, ex.actual_steering(), amps[s]);
          const auto values = evaluate_many(detectors, whiten(z, noise.S, ex.nominal_steering()), sc.K_S);
          for (std::size_t d = 0; d < n_det; ++d) row[s * n_det + d] = values[d] > records[d].threshold ? 1 : 0;
        }
      },
      workers ? workers : worker_count());

  std::vector<PdCurve> curves(n_det);
  for (std::size_t d = 0; d < n_det; ++d) {
    auto& c = curves[d];
    c.detector = detectors[d];
    c.snr_grid_db = snr_grid_db;
    c.n_trials = n_trials;
    c.cos2_theta = ex.cos2();
    c.seed = master_seed;
    for (std::size_t s = 0; s < n_snr; ++s) {
      std::int64_t count = 0;
      for (const auto& row : hits) count += row[s * n_det + d];
      const double p = static_cast<double>(count) / static_cast<double>(n_trials);
      c.pd.push_back(p);
      c.ci_halfwidth.push_back(pd_ci_halfwidth(p, n_trials));
    }
  }
  return curves;
}

inline PdCurve estimate_pd(const Experiment& ex, const ThresholdRecord& record, const std::vector<double>& snr_grid_db,
                           std::int64_t n_trials, std::uint64_t master_seed) {
  return estimate_pd(ex, std::vector<ThresholdRecord>{record}, snr_grid_db, n_trials, master_seed).front();
}

/// First grid index where the curve reaches `level`, or npos.
inline std::size_t first_reaching(const PdCurve& c, double level) {
  for (std::size_t i = 0; i < c.pd.size(); ++i)
    if (c.pd[i] >= level) return i;
  return static_cast<std::size_t>(-1);
}

// ---------------------------------------------------------------------------
// CFAR check

struct CfarReport {
  DetectorKind detector;
  double pfa_target = 0.0;
  double threshold = 0.0;
  double empirical_pfa = 0.0;
  std::int64_t n_trials = 0;
  double standard_error = 0.0;  // binomial, at pfa_target
  bool pass = false;
};

/// Applies a threshold calibrated under `a` to H0 data generated under `b`;
/// passes iff the empirical false-alarm rate is within 3 binomial standard
/// errors of the target.
inline std::vector<CfarReport> cfar_check(const Experiment& a, const Experiment& b,
                                          const std::vector<ThresholdRecord>& from_a, std::int64_t n_trials,
                                          std::uint64_t master_seed, unsigned workers = 0) {
  const auto& sa = a.scenario();
  const auto& sb = b.scenario();
  if (sa.N != sb.N || sa.K_P != sb.K_P || sa.K_S != sb.K_S)
    throw Error(ErrorCode::InvalidComparison, "scenarios differ in N, K_P or K_S");
  if (n_trials < 1) throw Error(ErrorCode::Config, "n_trials must be positive");
  const std::string digest = a.digest();
  for (const auto& r : from_a)
    if (r.scenario_digest != digest)
      throw Error(ErrorCode::StaleThreshold, "threshold for " + r.detector.label() + " was not calibrated on scenario A");
  const auto rates = measure_pfa(b, from_a, n_trials, master_seed, Stream::Verification, workers);
  std::vector<CfarReport> out;
  for (std::size_t i = 0; i < from_a.size(); ++i) {
    CfarReport r;
    r.detector = from_a[i].detector;
    r.pfa_target = from_a[i].pfa_target;
    r.threshold = from_a[i].threshold;
    r.empirical_pfa = rates[i].rate();
    r.n_trials = n_trials;
    r.standard_error = binomial_se(r.pfa_target, n_trials);
    r.pass = std::abs(r.empirical_pfa - r.pfa_target) <= 3.0 * r.standard_error;
    out.push_back(r);
  }
  return out;
}

}  // namespace rsdetect
