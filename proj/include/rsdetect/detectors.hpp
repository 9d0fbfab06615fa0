#pragma once

// Detection statistics for range-spread targets in Gaussian noise with
// unknown covariance:
//
//   RobustGLRT     det(I + Zw^H Zw) / [ (1+nu)^m det(I + A/(1+nu)) ]
//   Parametric(e)  same with m replaced by m/(1+e)
//   GlrtH          det(I + Zw^H Zw) / det(I + A)
//   Gamf           sum_k |z_k^H S^-1 v|^2 / (v^H S^-1 v)
//   Gasd           Gamf / sum_h z_h^H S^-1 z_h
//
// Zw is the whitened primary data, A the whitened data projected onto the
// orthogonal complement of the whitened steering vector, m = N K_P/(K_P+K_S)
// and nu the minimizer returned by nu_hat(). The determinant-ratio
// statistics are the (K_P+K_S)-th root of the likelihood ratio. Every
// statistic is reported as a natural logarithm.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "rsdetect/error.hpp"
#include "rsdetect/matrix_core.hpp"

namespace rsdetect {

struct DetectorKind {
  enum class Type { RobustGlrt, Parametric, GlrtH, Gamf, Gasd };

  Type type = Type::RobustGlrt;
  double epsilon = 0.0;  // Parametric only

  static DetectorKind robust_glrt() { return {Type::RobustGlrt, 0.0}; }
  static DetectorKind parametric(double eps) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::InvalidInput, "epsilon must be >= 0");
    return {Type::Parametric, eps};
  }
  static DetectorKind glrt_h() { return {Type::GlrtH, 0.0}; }
  static DetectorKind gamf() { return {Type::Gamf, 0.0}; }
  static DetectorKind gasd() { return {Type::Gasd, 0.0}; }

  /// Stable name used in CSV/JSON: GLRT, Parametric(0.2), GLRT-H, GAMF, GASD.
  std::string label() const {
    switch (type) {
      case Type::RobustGlrt: return "GLRT";
      case Type::Parametric: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "Parametric(%.10g)", epsilon);
        return buf;
      }
      case Type::GlrtH: return "GLRT-H";
      case Type::Gamf: return "GAMF";
      case Type::Gasd: return "GASD";
    }
    return "?";
  }

  /// Accepts label() output plus lowercase aliases (glrt, glrt-h, gamf,
  /// gasd, parametric:<eps>).
  static DetectorKind parse(std::string_view text) {
    auto lower = std::string(text);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "glrt" || lower == "robust" || lower == "robust-glrt") return robust_glrt();
    if (lower == "glrt-h" || lower == "glrth" || lower == "glrt_h") return glrt_h();
    if (lower == "gamf") return gamf();
    if (lower == "gasd") return gasd();
    std::string_view rest;
    if (lower.rfind("parametric(", 0) == 0 && lower.back() == ')')
      rest = std::string_view(lower).substr(11, lower.size() - 12);
    else if (lower.rfind("parametric:", 0) == 0)
      rest = std::string_view(lower).substr(11);
    if (!rest.empty()) {
      const std::string num(rest);
      char* end = nullptr;
      const double eps = std::strtod(num.c_str(), &end);
      if (end != num.c_str() && *end == '\0') return parametric(eps);
    }
    throw Error(ErrorCode::Config, "unknown detector '" + std::string(text) + "'");
  }

  friend bool operator==(const DetectorKind& a, const DetectorKind& b) {
    return a.type == b.type && a.epsilon == b.epsilon;
  }
};

/// The standard five-detector comparison set.
inline std::vector<DetectorKind> all_detectors(double parametric_epsilon) {
  return {DetectorKind::robust_glrt(), DetectorKind::parametric(parametric_epsilon), DetectorKind::glrt_h(),
          DetectorKind::gamf(), DetectorKind::gasd()};
}

struct NuEstimate {
  enum class Branch { BoundaryZero, InteriorRoot };
  double value = 0.0;
  Branch branch = Branch::BoundaryZero;
  double residual = 0.0;  // |g(value) - m| on the interior branch
};

struct StatisticValue {
  double log_value = 0.0;  // -inf encodes a zero linear statistic
  DetectorKind detector;

  double linear() const { return std::exp(log_value); }
};

/// m = N K_P / (K_P + K_S), deflated by 1/(1+epsilon).
inline double effective_exponent(int n, int kp, int ks, double epsilon = 0.0) {
  const double m = static_cast<double>(n) * kp / static_cast<double>(kp + ks);
  return m / (1.0 + epsilon);
}

/// g(nu) = sum_i lambda_i / (lambda_i + 1 + nu), strictly decreasing in nu.
inline double nu_equation(const std::vector<double>& lambdas, double nu) {
  double g = 0.0;
  for (double l : lambdas) g += l / (l + 1.0 + nu);
  return g;
}

inline double nu_equation_slope(const std::vector<double>& lambdas, double nu) {
  double d = 0.0;
  for (double l : lambdas) {
    const double t = l + 1.0 + nu;
    d -= l / (t * t);
  }
  return d;
}

/// Minimizer over nu >= 0 of (1+nu)^m prod_i (lambda_i/(1+nu) + 1).
/// Zero when g(0) <= m, otherwise the root of g(nu) = m, found by Newton
/// steps safeguarded inside the bracket [0, sum(lambda)/m].
inline NuEstimate nu_hat(const EigenSpectrum& spectrum, double m_eff) {
  if (!(m_eff > 0.0) || !std::isfinite(m_eff)) throw Error(ErrorCode::InvalidInput, "m_eff must be positive");
  const std::vector<double> lambdas = spectrum.nonzero();
  if (nu_equation(lambdas, 0.0) <= m_eff) return {};

  double sum = 0.0;
  for (double l : lambdas) sum += l;
  double lo = 0.0;
  double hi = sum / m_eff;  // g(hi) < sum/hi = m
  double x = 0.0;
  double gx = nu_equation(lambdas, x);
  for (int iter = 0; iter < 500; ++iter) {
    const double diff = gx - m_eff;
    if (std::abs(diff) <= 1e-12 * m_eff) break;
    if (diff > 0.0)
      lo = x;
    else
      hi = x;
    if (hi - lo <= 1e-12 * (1.0 + x)) break;
    double next = x - diff / nu_equation_slope(lambdas, x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
    gx = nu_equation(lambdas, x);
  }
  return {x, NuEstimate::Branch::InteriorRoot, std::abs(gx - m_eff)};
}

/// Primary data and steering vector whitened by the Cholesky factor of S.
/// Every statistic here is a function of Zw^H Zw, vw^H Zw and |vw|^2 only,
/// which are the same for any whitening W with W S W^H = I.
struct WhitenedData {
  ComplexMatrix z;
  ComplexVector v;
  double v_norm2 = 0.0;

  int n() const { return static_cast<int>(z.rows()); }
  int kp() const { return static_cast<int>(z.cols()); }
};

inline WhitenedData whiten(const ComplexMatrix& z, const HermitianMatrix& s, const ComplexVector& v) {
  if (z.rows() != s.rows() || v.size() != s.rows() || z.cols() == 0)
    throw Error(ErrorCode::InvalidInput, "dimension mismatch between Z, S and v");
  require_finite(z, "Z");
  require_finite(v, "v");
  if (v.squaredNorm() == 0.0) throw Error(ErrorCode::InvalidInput, "steering vector is zero");
  const auto llt = cholesky_pd(s);
  WhitenedData w;
  w.z = llt.matrixL().solve(z);
  w.v = llt.matrixL().solve(v);
  w.v_norm2 = w.v.squaredNorm();
  return w;
}

/// alpha_k = v^H S^-1 z_k / v^H S^-1 v.
inline std::vector<cplx> alpha_hat(const WhitenedData& w) {
  const Eigen::RowVectorXcd num = w.v.adjoint() * w.z;
  std::vector<cplx> out(static_cast<std::size_t>(w.kp()));
  for (int k = 0; k < w.kp(); ++k) out[static_cast<std::size_t>(k)] = num(k) / w.v_norm2;
  return out;
}

inline std::vector<cplx> alpha_hat(const ComplexMatrix& z, const HermitianMatrix& s, const ComplexVector& v) {
  return alpha_hat(whiten(z, s, v));
}

/// Spectrum of A = P_perp S^-1/2 Z Z^H S^-1/2 P_perp, computed from the
/// K_P x K_P Gram matrix of the projected whitened data (same nonzero
/// eigenvalues).
inline EigenSpectrum projected_spectrum(const WhitenedData& w) {
  const ComplexMatrix perp = w.z - w.v * ((w.v.adjoint() * w.z) / w.v_norm2);
  return eigvals_psd(symmetrize(perp.adjoint() * perp));
}

inline EigenSpectrum projected_spectrum(const ComplexMatrix& z, const HermitianMatrix& s, const ComplexVector& v) {
  return projected_spectrum(whiten(z, s, v));
}

/// log of  min over alpha of det(Z_alpha Z_alpha^H/(nu+1) + S), which equals
/// log det S + log det(I + A/(nu+1)).
inline double log_min_alpha_objective(const ComplexMatrix& z, const HermitianMatrix& s, const ComplexVector& v,
                                      double nu) {
  if (!(nu >= 0.0)) throw Error(ErrorCode::InvalidInput, "nu must be >= 0");
  const auto llt = cholesky_pd(s);
  const double log_det_s = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  return log_det_s + logdet_id_plus(projected_spectrum(z, s, v), 1.0 + nu);
}

/// Spectrum of S^-1/2 Z Z^H S^-1/2 (through Zw^H Zw).
inline EigenSpectrum whitened_data_spectrum(const WhitenedData& w) {
  return eigvals_psd(symmetrize(w.z.adjoint() * w.z));
}

namespace detail {
/// log of  numerator / [(1+nu)^m det(I + A/(1+nu))].
inline double ratio_log_value(double log_numerator, const EigenSpectrum& projected, double m, const NuEstimate& nu) {
  const double scale = 1.0 + nu.value;
  return log_numerator - (m * std::log(scale) + logdet_id_plus(projected, scale));
}
}  // namespace detail

/// Intermediate quantities of the determinant-ratio detectors.
struct GlrtBreakdown {
  double log_numerator = 0.0;
  EigenSpectrum projected;
  NuEstimate nu;
  double m_eff = 0.0;
  double log_value = 0.0;
};

inline GlrtBreakdown glrt_breakdown(const WhitenedData& w, int ks, double epsilon) {
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidInput, "epsilon must be >= 0");
  if (ks <= 0) throw Error(ErrorCode::InvalidInput, "K_S must be positive");
  GlrtBreakdown b;
  b.log_numerator = logdet_id_plus(whitened_data_spectrum(w), 1.0);
  b.projected = projected_spectrum(w);
  b.m_eff = effective_exponent(w.n(), w.kp(), ks, epsilon);
  b.nu = nu_hat(b.projected, b.m_eff);
  b.log_value = detail::ratio_log_value(b.log_numerator, b.projected, b.m_eff, b.nu);
  return b;
}

inline StatisticValue parametric_statistic(const WhitenedData& w, int ks, double epsilon) {
  const auto kind = DetectorKind::parametric(epsilon);
  return {glrt_breakdown(w, ks, epsilon).log_value, kind};
}

inline StatisticValue glrt_robust_statistic(const WhitenedData& w, int ks) {
  return {glrt_breakdown(w, ks, 0.0).log_value, DetectorKind::robust_glrt()};
}

inline StatisticValue glrt_h_statistic(const WhitenedData& w) {
  const double num = logdet_id_plus(whitened_data_spectrum(w), 1.0);
  return {detail::ratio_log_value(num, projected_spectrum(w), 0.0, NuEstimate{}), DetectorKind::glrt_h()};
}

namespace detail {
inline double matched_energy(const WhitenedData& w) {
  return (w.v.adjoint() * w.z).squaredNorm() / w.v_norm2;
}
inline double safe_log(double x) {
  return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
}
}  // namespace detail

inline StatisticValue gamf_statistic(const WhitenedData& w) {
  return {detail::safe_log(detail::matched_energy(w)), DetectorKind::gamf()};
}

inline StatisticValue gasd_statistic(const WhitenedData& w) {
  const double total = w.z.squaredNorm();
  if (!(total > 0.0)) throw Error(ErrorCode::UndefinedStatistic, "GASD is undefined for Z = 0");
  return {detail::safe_log(detail::matched_energy(w) / total), DetectorKind::gasd()};
}

// Convenience overloads on raw (Z, S, v).

inline StatisticValue glrt_robust_statistic(const ComplexMatrix& z, const HermitianMatrix& s,
                                            const ComplexVector& v, int ks) {
  return glrt_robust_statistic(whiten(z, s, v), ks);
}
inline StatisticValue parametric_statistic(const ComplexMatrix& z, const HermitianMatrix& s,
                                           const ComplexVector& v, int ks, double epsilon) {
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidInput, "epsilon must be >= 0");
  return parametric_statistic(whiten(z, s, v), ks, epsilon);
}
inline StatisticValue glrt_h_statistic(const ComplexMatrix& z, const HermitianMatrix& s, const ComplexVector& v) {
  return glrt_h_statistic(whiten(z, s, v));
}
inline StatisticValue gamf_statistic(const ComplexMatrix& z, const HermitianMatrix& s, const ComplexVector& v) {
  return gamf_statistic(whiten(z, s, v));
}
inline StatisticValue gasd_statistic(const ComplexMatrix& z, const HermitianMatrix& s, const ComplexVector& v) {
  return gasd_statistic(whiten(z, s, v));
}

inline StatisticValue evaluate(const DetectorKind& kind, const WhitenedData& w, int ks) {
  switch (kind.type) {
    case DetectorKind::Type::RobustGlrt: return glrt_robust_statistic(w, ks);
    case DetectorKind::Type::Parametric: return parametric_statistic(w, ks, kind.epsilon);
    case DetectorKind::Type::GlrtH: return glrt_h_statistic(w);
    case DetectorKind::Type::Gamf: return gamf_statistic(w);
    case DetectorKind::Type::Gasd: return gasd_statistic(w);
  }
  throw Error(ErrorCode::InvalidInput, "unknown detector");
}

inline StatisticValue evaluate(const DetectorKind& kind, const ComplexMatrix& z, const HermitianMatrix& s,
                               const ComplexVector& v, int ks) {
  return evaluate(kind, whiten(z, s, v), ks);
}

/// Log statistics for several detectors on one dataset; shares the
/// whitening and the spectra between detectors.
inline std::vector<double> evaluate_many(const std::vector<DetectorKind>& kinds, const WhitenedData& w, int ks) {
  std::vector<double> out;
  out.reserve(kinds.size());
  bool have_spectra = false;
  double log_num = 0.0;
  EigenSpectrum proj;
  for (const auto& kind : kinds) {
    switch (kind.type) {
      case DetectorKind::Type::Gamf: out.push_back(gamf_statistic(w).log_value); continue;
      case DetectorKind::Type::Gasd: out.push_back(gasd_statistic(w).log_value); continue;
      default: break;
    }
    if (!have_spectra) {
      log_num = logdet_id_plus(whitened_data_spectrum(w), 1.0);
      proj = projected_spectrum(w);
      have_spectra = true;
    }
    if (kind.type == DetectorKind::Type::GlrtH) {
      out.push_back(detail::ratio_log_value(log_num, proj, 0.0, NuEstimate{}));
      continue;
    }
    const double eps = kind.type == DetectorKind::Type::Parametric ? kind.epsilon : 0.0;
    const double m = effective_exponent(w.n(), w.kp(), ks, eps);
    out.push_back(detail::ratio_log_value(log_num, proj, m, nu_hat(proj, m)));
  }
  return out;
}

}  // namespace rsdetect
