#pragma once

// Simulation world: Gaussian-shaped clutter plus white noise, temporal
// steering vectors with optional Doppler mismatch, SNR-driven amplitudes and
// seeded complex Gaussian datasets.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rsdetect/error.hpp"
#include "rsdetect/matrix_core.hpp"

namespace rsdetect {

struct Scenario {
  int N = 16;
  int K_P = 4;
  int K_S = 32;
  double sigma_f = 0.05;
  double noise_db_below_clutter = 10.0;
  double f_d = 0.08;
  double delta = 0.0;
  double snr_db = 15.0;

  void validate() const {
    if (N < 2) throw Error(ErrorCode::Config, "N must be >= 2");
    if (K_P < 1) throw Error(ErrorCode::Config, "K_P must be >= 1");
    if (K_S < N) throw Error(ErrorCode::Config, "K_S must be >= N");
    if (!(sigma_f > 0.0)) throw Error(ErrorCode::Config, "sigma_f must be positive");
    if (!std::isfinite(noise_db_below_clutter) || !std::isfinite(f_d) || !std::isfinite(delta))
      throw Error(ErrorCode::Config, "scenario values must be finite");
  }

  /// Doppler of the actual target signature.
  double target_doppler() const { return f_d + delta / N; }
};

/// C = R_c + sigma_n^2 I with [R_c]_ij = exp(-2 pi^2 sigma_f^2 (i-j)^2) and
/// sigma_n^2 = 10^(-noise_db/10).
inline HermitianMatrix clutter_covariance(int n, double sigma_f, double noise_db_below_clutter) {
  if (n < 1 || !(sigma_f > 0.0)) throw Error(ErrorCode::InvalidInput, "need n >= 1 and sigma_f > 0");
  const double noise = std::pow(10.0, -noise_db_below_clutter / 10.0);
  const double k = -2.0 * std::numbers::pi * std::numbers::pi * sigma_f * sigma_f;
  HermitianMatrix c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double lag = i - j;
      c(i, j) = std::exp(k * lag * lag) + (i == j ? noise : 0.0);
    }
  return c;
}

/// [1, e^{i 2 pi fd}, ..., e^{i 2 pi (N-1) fd}]^T
inline ComplexVector steering_vector(int n, double fd) {
  ComplexVector v(n);
  for (int k = 0; k < n; ++k) v(k) = std::polar(1.0, 2.0 * std::numbers::pi * fd * k);
  return v;
}

/// |v^H C^-1 p|^2 / ((v^H C^-1 v)(p^H C^-1 p))
inline double cos2_theta(const ComplexVector& v, const ComplexVector& p, const HermitianMatrix& c) {
  if (v.squaredNorm() == 0.0 || p.squaredNorm() == 0.0) throw Error(ErrorCode::InvalidInput, "zero steering vector");
  const auto llt = cholesky_pd(c);
  const ComplexVector vw = llt.matrixL().solve(v);
  const ComplexVector pw = llt.matrixL().solve(p);
  const double num = std::norm(vw.dot(pw));
  return std::min(1.0, num / (vw.squaredNorm() * pw.squaredNorm()));
}

struct AmplitudeVector {
  std::vector<cplx> alphas;

  double energy() const {
    double e = 0.0;
    for (const auto& a : alphas) e += std::norm(a);
    return e;
  }
};

/// p^H C^-1 p
inline double whitened_energy(const ComplexVector& p, const HermitianMatrix& c) {
  const auto llt = cholesky_pd(c);
  return ComplexVector(llt.matrixL().solve(p)).squaredNorm();
}

/// Real, equal amplitudes with sum_k |alpha_k|^2 p^H C^-1 p = 10^(snr_db/10).
inline AmplitudeVector amplitudes_for_snr(int kp, double snr_db, double p_energy) {
  if (kp < 1 || !(p_energy > 0.0)) throw Error(ErrorCode::InvalidInput, "need K_P >= 1 and p^H C^-1 p > 0");
  const double total = std::pow(10.0, snr_db / 10.0) / p_energy;
  return {std::vector<cplx>(static_cast<std::size_t>(kp), cplx(std::sqrt(total / kp), 0.0))};
}

inline AmplitudeVector amplitudes_for_snr(const Scenario& sc, const ComplexVector& p, const HermitianMatrix& c) {
  return amplitudes_for_snr(sc.K_P, sc.snr_db, whitened_energy(p, c));
}

/// Whole energy in the first cell; same SNR as amplitudes_for_snr.
inline AmplitudeVector single_cell_amplitudes(int kp, double snr_db, double p_energy) {
  if (kp < 1 || !(p_energy > 0.0)) throw Error(ErrorCode::InvalidInput, "need K_P >= 1 and p^H C^-1 p > 0");
  AmplitudeVector a{std::vector<cplx>(static_cast<std::size_t>(kp), cplx(0.0, 0.0))};
  a.alphas[0] = cplx(std::sqrt(std::pow(10.0, snr_db / 10.0) / p_energy), 0.0);
  return a;
}

// ---------------------------------------------------------------------------
// Random streams

/// Independent trial streams for the different Monte Carlo phases.
enum class Stream : std::uint64_t { Calibration = 0x01, Detection = 0x02, Verification = 0x03, Oracle = 0x04 };

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of trial `trial` in `stream`; depends only on its arguments.
inline constexpr std::uint64_t trial_seed(std::uint64_t master_seed, Stream stream, std::uint64_t trial) {
  const std::uint64_t base = splitmix64(splitmix64(master_seed) ^ (static_cast<std::uint64_t>(stream) << 56));
  return splitmix64(base + splitmix64(trial));
}

using Engine = std::mt19937_64;

inline Engine trial_engine(std::uint64_t master_seed, Stream stream, std::uint64_t trial) {
  return Engine(trial_seed(master_seed, stream, trial));
}

// ---------------------------------------------------------------------------
// Experiments and datasets

enum class Hypothesis { H0, H1 };

/// A Scenario together with everything derived from it: covariance, its
/// Cholesky factor, nominal and actual steering vectors.
class Experiment {
 public:
  static Experiment from_scenario(const Scenario& sc) {
    sc.validate();
    return Experiment(sc, clutter_covariance(sc.N, sc.sigma_f, sc.noise_db_below_clutter), false);
  }

  /// Same scenario with an arbitrary PD covariance in place of the clutter model.
  static Experiment with_covariance(const Scenario& sc, const HermitianMatrix& c) {
    sc.validate();
    if (c.rows() != sc.N || c.cols() != sc.N) throw Error(ErrorCode::InvalidInput, "covariance size != N");
    return Experiment(sc, symmetrize(c), true);
  }

  const Scenario& scenario() const { return scenario_; }
  const HermitianMatrix& covariance() const { return covariance_; }
  const ComplexMatrix& covariance_factor() const { return factor_; }
  const ComplexVector& nominal_steering() const { return nominal_; }
  const ComplexVector& actual_steering() const { return actual_; }
  /// p^H C^-1 p
  double actual_energy() const { return actual_energy_; }
  double cos2() const { return cos2_; }
  bool custom_covariance() const { return custom_; }

  /// Content hash of the fields that shape the H0 statistic stream.
  std::string digest() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* data, std::size_t len) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
      }
    };
    char buf[128];
    int len = std::snprintf(buf, sizeof buf, "N=%d;KP=%d;KS=%d;fd=%.15g;", scenario_.N, scenario_.K_P, scenario_.K_S,
                            scenario_.f_d);
    mix(buf, static_cast<std::size_t>(len));
    for (Eigen::Index i = 0; i < covariance_.size(); ++i) {
      len = std::snprintf(buf, sizeof buf, "%.12e,%.12e;", covariance_.data()[i].real(), covariance_.data()[i].imag());
      mix(buf, static_cast<std::size_t>(len));
    }
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  AmplitudeVector amplitudes(double snr_db) const {
    return amplitudes_for_snr(scenario_.K_P, snr_db, actual_energy_);
  }

 private:
  Experiment(const Scenario& sc, HermitianMatrix c, bool custom)
      : scenario_(sc), covariance_(std::move(c)), custom_(custom) {
    factor_ = cholesky_pd(covariance_).matrixL();
    nominal_ = steering_vector(sc.N, sc.f_d);
    actual_ = steering_vector(sc.N, sc.target_doppler());
    actual_energy_ = whitened_energy(actual_, covariance_);
    cos2_ = cos2_theta(nominal_, actual_, covariance_);
  }

  Scenario scenario_;
  HermitianMatrix covariance_;
  ComplexMatrix factor_;
  ComplexVector nominal_;
  ComplexVector actual_;
  double actual_energy_ = 0.0;
  double cos2_ = 1.0;
  bool custom_ = false;
};

struct NoiseDraw {
  ComplexMatrix primary;  // N x K_P noise columns
  HermitianMatrix S;      // sum of K_S secondary outer products
};

/// N x cols matrix of CN(0, C) columns, n = L (x + i y)/sqrt(2).
/// Columns are drawn in order; within a column, re then im per entry.
inline ComplexMatrix draw_circular_gaussian(const ComplexMatrix& factor, Eigen::Index cols, Engine& engine) {
  std::normal_distribution<double> normal;
  const Eigen::Index n = factor.rows();
  ComplexMatrix g(n, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = normal(engine);
      const double im = normal(engine);
      g(i, j) = cplx(re, im);
    }
  g *= std::sqrt(0.5);
  return factor.triangularView<Eigen::Lower>() * g;
}

/// Secondary data first, then primary noise.
inline NoiseDraw draw_noise(const Experiment& ex, Engine& engine) {
  const auto& sc = ex.scenario();
  const ComplexMatrix all = draw_circular_gaussian(ex.covariance_factor(), sc.K_S + sc.K_P, engine);
  NoiseDraw d;
  const auto secondary = all.leftCols(sc.K_S);
  d.S = symmetrize(secondary * secondary.adjoint());
  d.primary = all.rightCols(sc.K_P);
  return d;
}

/// z_k = alpha_k p + n_k.
inline ComplexMatrix add_signal(const ComplexMatrix& noise, const ComplexVector& p, const AmplitudeVector& amp) {
  if (static_cast<Eigen::Index>(amp.alphas.size()) != noise.cols())
    throw Error(ErrorCode::InvalidInput, "amplitude count != K_P");
  ComplexMatrix z = noise;
  for (Eigen::Index k = 0; k < noise.cols(); ++k) z.col(k) += amp.alphas[static_cast<std::size_t>(k)] * p;
  return z;
}

struct Dataset {
  ComplexMatrix Z;
  HermitianMatrix S;
  Hypothesis hypothesis = Hypothesis::H0;
  std::uint64_t master_seed = 0;
  std::uint64_t trial = 0;
};

/// One realization on the given engine. Under H1 the amplitudes multiply
/// `actual_steering`; under H0 they are ignored.
inline Dataset draw_dataset(const Experiment& ex, Hypothesis hyp, const ComplexVector& actual_steering,
                            const AmplitudeVector& amp, Engine& engine) {
  NoiseDraw noise = draw_noise(ex, engine);
  Dataset d;
  d.hypothesis = hyp;
  d.S = std::move(noise.S);
  d.Z = hyp == Hypothesis::H1 ? add_signal(noise.primary, actual_steering, amp) : std::move(noise.primary);
  return d;
}

/// Trial `trial` of `stream` under `master_seed`, with the scenario's own
/// SNR and actual steering vector.
inline Dataset draw_dataset(const Experiment& ex, Hypothesis hyp, std::uint64_t master_seed, Stream stream,
                            std::uint64_t trial) {
  Engine engine = trial_engine(master_seed, stream, trial);
  Dataset d = draw_dataset(ex, hyp, ex.actual_steering(), ex.amplitudes(ex.scenario().snr_db), engine);
  d.master_seed = master_seed;
  d.trial = trial;
  return d;
}

}  // namespace rsdetect
