#pragma once

// Brute-force verifiers for the closed forms used by the detectors. They rely
// on elementary operations only (Gaussian elimination, grids, derivative-free
// search, finite differences) and never call the detector code paths they
// check, except to fetch the closed-form value under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "rsdetect/detectors.hpp"
#include "rsdetect/error.hpp"
#include "rsdetect/matrix_core.hpp"
#include "rsdetect/scenario.hpp"

namespace rsdetect::oracle {

/// Determinant by Gaussian elimination with partial pivoting.
inline cplx dense_det(ComplexMatrix a) {
  const Eigen::Index n = a.rows();
  cplx det(1.0, 0.0);
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == cplx(0.0, 0.0)) return {0.0, 0.0};
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      det = -det;
    }
    det *= a(col, col);
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const cplx f = a(r, col) / a(col, col);
      for (Eigen::Index c = col; c < n; ++c) a(r, c) -= f * a(col, c);
    }
  }
  return det;
}

/// Solves a x = b by Gaussian elimination with partial pivoting.
inline ComplexVector dense_solve(ComplexMatrix a, ComplexVector b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == cplx(0.0, 0.0)) throw Error(ErrorCode::SingularMatrix, "dense_solve: singular system");
    a.row(pivot).swap(a.row(col));
    std::swap(b(pivot), b(col));
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const cplx f = a(r, col) / a(col, col);
      for (Eigen::Index c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b(r) -= f * b(col);
    }
  }
  ComplexVector x(n);
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    cplx acc = b(r);
    for (Eigen::Index c = r + 1; c < n; ++c) acc -= a(r, c) * x(c);
    x(r) = acc / a(r, r);
  }
  return x;
}

/// det(Z_alpha Z_alpha^H / (nu+1) + S) for explicit alphas.
inline double alpha_objective(const ComplexMatrix& z, const HermitianMatrix& s, const ComplexVector& v, double nu,
                              const std::vector<cplx>& alphas) {
  ComplexMatrix za = z;
  for (Eigen::Index k = 0; k < z.cols(); ++k) za.col(k) -= alphas[static_cast<std::size_t>(k)] * v;
  return dense_det(za * za.adjoint() / (nu + 1.0) + s).real();
}

struct AlphaMinimum {
  std::vector<cplx> alphas;
  double value = 0.0;
};

/// Multi-start coordinate search with shrinking steps over the 2 K_P real
/// coordinates of alpha.
inline AlphaMinimum min_alpha_oracle(const ComplexMatrix& z, const HermitianMatrix& s, const ComplexVector& v,
                                     double nu, std::uint64_t seed = 1, int starts = 20) {
  if (z.rows() > 6 || z.cols() > 3) throw Error(ErrorCode::InvalidInput, "min_alpha_oracle: instance too large");
  if (!(nu >= 0.0)) throw Error(ErrorCode::InvalidInput, "nu must be >= 0");
  const auto kp = static_cast<std::size_t>(z.cols());
  const std::size_t dims = 2 * kp;

  auto objective = [&](const std::vector<double>& x) {
    std::vector<cplx> a(kp);
    for (std::size_t k = 0; k < kp; ++k) a[k] = cplx(x[2 * k], x[2 * k + 1]);
    return alpha_objective(z, s, v, nu, a);
  };

  // Search box from the unweighted least-squares fit of each column onto v.
  double radius = 1.0;
  for (Eigen::Index k = 0; k < z.cols(); ++k) radius = std::max(radius, 4.0 * std::abs(v.dot(z.col(k))) / v.squaredNorm());

  Engine engine(seed);
  std::uniform_real_distribution<double> uniform(-radius, radius);
  AlphaMinimum best;
  best.value = std::numeric_limits<double>::infinity();
  for (int start = 0; start < starts; ++start) {
    std::vector<double> x(dims);
    for (double& xi : x) xi = uniform(engine);
    double fx = objective(x);
    double step = radius / 4.0;
    while (step > 1e-12 * (1.0 + radius)) {
      bool improved = false;
      for (std::size_t c = 0; c < dims; ++c) {
        for (double dir : {1.0, -1.0}) {
          std::vector<double> y = x;
          y[c] += dir * step;
          double fy = objective(y);
          if (fy >= fx) continue;
          // keep going while it pays
          for (;;) {
            x = y;
            fx = fy;
            y[c] += dir * step;
            fy = objective(y);
            if (fy >= fx) break;
          }
          improved = true;
          break;
        }
      }
      if (!improved) step *= 0.5;
    }
    if (fx < best.value) {
      best.value = fx;
      best.alphas.assign(kp, {});
      for (std::size_t k = 0; k < kp; ++k) best.alphas[k] = cplx(x[2 * k], x[2 * k + 1]);
    }
  }
  return best;
}

/// The minimum over alpha written three ways, each with dense determinants.
struct MMinForms {
  double projector_form = 0.0;  // det S det(P S^-1/2 Z Z^H S^-1/2 P/(nu+1) + I_N)
  double residual_form = 0.0;   // det(Z_ahat Z_ahat^H/(nu+1) + S)
  double small_form = 0.0;      // det S det(Zperp^H Zperp/(nu+1) + I_KP)
  std::vector<cplx> alpha;      // alpha-hat from explicit solves

  double max_relative_spread() const {
    const double hi = std::max({projector_form, residual_form, small_form});
    const double lo = std::min({projector_form, residual_form, small_form});
    return (hi - lo) / std::abs(hi);
  }
};

inline MMinForms m_min_forms(const ComplexMatrix& z, const HermitianMatrix& s, const ComplexVector& v, double nu) {
  const Eigen::Index n = z.rows();
  const Eigen::Index kp = z.cols();
  MMinForms out;
  const double det_s = dense_det(s).real();

  // alpha_k = v^H S^-1 z_k / v^H S^-1 v with x = S^-1 v
  const ComplexVector x = dense_solve(s, v);
  const cplx vsv = v.dot(x);
  out.alpha.resize(static_cast<std::size_t>(kp));
  for (Eigen::Index k = 0; k < kp; ++k) out.alpha[static_cast<std::size_t>(k)] = x.dot(z.col(k)) / vsv;
  out.residual_form = alpha_objective(z, s, v, nu, out.alpha);

  const HermitianMatrix t = inv_sqrt(s);
  const ComplexVector vt = t * v;
  const ComplexMatrix proj = ComplexMatrix::Identity(n, n) - vt * vt.adjoint() / vt.squaredNorm();
  const ComplexMatrix zt = t * z;
  const ComplexMatrix big = proj * zt * zt.adjoint() * proj / (nu + 1.0) + ComplexMatrix::Identity(n, n);
  out.projector_form = det_s * dense_det(big).real();

  const ComplexMatrix zperp = proj * zt;
  const ComplexMatrix small = zperp.adjoint() * zperp / (nu + 1.0) + ComplexMatrix::Identity(kp, kp);
  out.small_form = det_s * dense_det(small).real();
  return out;
}

/// f(nu) = (1+nu)^m prod_i (lambda_i/(nu+1) + 1)
inline double f_nu(const std::vector<double>& lambdas, double m, double nu) {
  double f = std::pow(1.0 + nu, m);
  for (double l : lambdas) f *= l / (nu + 1.0) + 1.0;
  return f;
}

struct NuMinimum {
  double nu = 0.0;
  double value = 0.0;       // refined minimum
  double grid_value = 0.0;  // best value on the raw grid
};

/// Grid nu in {0, 1e-3, ..., 100} followed by golden-section refinement
/// around the best grid point.
inline NuMinimum min_nu_oracle(const std::vector<double>& lambdas, double m) {
  constexpr double kStep = 1e-3;
  constexpr int kPoints = 100000;
  NuMinimum best;
  best.value = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kPoints; ++i) {
    const double nu = i * kStep;
    const double f = f_nu(lambdas, m, nu);
    if (f < best.value) {
      best.value = f;
      best.nu = nu;
    }
  }
  best.grid_value = best.value;

  double a = std::max(0.0, best.nu - kStep);
  double b = best.nu + kStep;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + b); ++it) {
    if (f_nu(lambdas, m, c) < f_nu(lambdas, m, d))
      b = d;
    else
      a = c;
    c = b - ratio * (b - a);
    d = a + ratio * (b - a);
  }
  const double refined = 0.5 * (a + b);
  const double fr = f_nu(lambdas, m, refined);
  if (fr < best.value) {
    best.value = fr;
    best.nu = refined;
  }
  return best;
}

inline double g_nu(const std::vector<double>& lambdas, double nu) {
  double g = 0.0;
  for (double l : lambdas) g += l / (l + 1.0 + nu);
  return g;
}

struct SlopeCheck {
  double nu = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
  bool pass = false;
};

/// Central differences of g with step 1e-5 (1+nu) against the analytic slope.
inline std::vector<SlopeCheck> derivative_check_g(const EigenSpectrum& spectrum, const std::vector<double>& nu_points,
                                                  double tolerance = 1e-5) {
  const std::vector<double> lambdas = spectrum.nonzero();
  std::vector<SlopeCheck> out;
  for (double nu : nu_points) {
    if (nu < 0.0 || nu > 100.0) throw Error(ErrorCode::InvalidInput, "nu points must lie in [0, 100]");
    SlopeCheck c;
    c.nu = nu;
    const double h = 1e-5 * (1.0 + nu);
    c.numeric = (g_nu(lambdas, nu + h) - g_nu(lambdas, nu - h)) / (2.0 * h);
    c.analytic = nu_equation_slope(lambdas, nu);
    c.relative_error = c.analytic == 0.0 ? std::abs(c.numeric) : std::abs(c.numeric - c.analytic) / std::abs(c.analytic);
    c.pass = c.relative_error <= tolerance && (lambdas.empty() || c.numeric < 0.0);
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Suites

struct OracleReport {
  std::uint64_t instance_seed = 0;
  std::string check;
  double closed_form_value = 0.0;
  double brute_force_value = 0.0;
  double gap = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct AlphaInstance {
  ComplexMatrix Z;
  HermitianMatrix S;
  ComplexVector v;
};

/// Random instance: S from k_s CN(0, I) draws, Z = v a^T + CN(0, I) noise.
inline AlphaInstance random_alpha_instance(std::uint64_t seed, int n = 4, int kp = 2, int ks = 8) {
  Engine engine(trial_seed(seed, Stream::Oracle, 0));
  const ComplexMatrix identity = ComplexMatrix::Identity(n, n);
  AlphaInstance inst;
  const ComplexMatrix r = draw_circular_gaussian(identity, ks, engine);
  inst.S = symmetrize(r * r.adjoint());
  inst.v = draw_circular_gaussian(identity, 1, engine).col(0);
  const ComplexMatrix a = draw_circular_gaussian(ComplexMatrix::Identity(kp, kp), 1, engine);
  inst.Z = inst.v * a.transpose() * 2.0 + draw_circular_gaussian(identity, kp, engine);
  return inst;
}

/// Closed form of the minimum over alpha against brute force and against
/// the three determinant forms; also compares minimizers.
inline std::vector<OracleReport> alpha_suite(int instances, std::uint64_t seed,
                                             const std::vector<double>& nus = {0.0, 0.5, 2.0}) {
  std::vector<OracleReport> out;
  for (int i = 0; i < instances; ++i) {
    const std::uint64_t inst_seed = splitmix64(seed + static_cast<std::uint64_t>(i));
    const AlphaInstance inst = random_alpha_instance(inst_seed);
    const auto closed_alpha = alpha_hat(inst.Z, inst.S, inst.v);
    for (double nu : nus) {
      const double closed = std::exp(log_min_alpha_objective(inst.Z, inst.S, inst.v, nu));
      const AlphaMinimum brute = min_alpha_oracle(inst.Z, inst.S, inst.v, nu, inst_seed);
      const MMinForms forms = m_min_forms(inst.Z, inst.S, inst.v, nu);
      const std::string tag = "nu=" + std::to_string(nu);

      OracleReport r{inst_seed, "alpha_min_value " + tag, closed, brute.value, (brute.value - closed) / closed, 1e-6};
      r.pass = std::abs(r.gap) <= r.tolerance;
      out.push_back(r);

      double dist = 0.0;
      for (std::size_t k = 0; k < closed_alpha.size(); ++k) dist = std::max(dist, std::abs(closed_alpha[k] - brute.alphas[k]));
      out.push_back({inst_seed, "alpha_argmin_distance " + tag, 0.0, dist, dist, 1e-4, dist <= 1e-4});

      const double spread = std::max(forms.max_relative_spread(),
                                     std::max({std::abs(forms.projector_form - closed), std::abs(forms.residual_form - closed),
                                               std::abs(forms.small_form - closed)}) /
                                         closed);
      out.push_back({inst_seed, "m_min_three_forms " + tag, closed, forms.residual_form, spread, 1e-8, spread <= 1e-8});
    }
  }
  return out;
}

/// nu_hat against the grid oracle, the root residual and the slope of g.
inline std::vector<OracleReport> nu_suite(int instances, std::uint64_t seed) {
  std::vector<OracleReport> out;
  for (int i = 0; i < instances; ++i) {
    const std::uint64_t inst_seed = splitmix64(seed + 0x5151 + static_cast<std::uint64_t>(i));
    Engine engine(inst_seed);
    std::uniform_int_distribution<int> rank_dist(1, 4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    EigenSpectrum spec;
    const int r = rank_dist(engine);
    for (int k = 0; k < r; ++k) spec.values.push_back(50.0 * (1.0 - unit(engine)));  // (0, 50]
    std::sort(spec.values.begin(), spec.values.end(), std::greater<>());
    spec.rank = r;
    const double m = 0.05 + 2.95 * unit(engine);

    const NuEstimate est = nu_hat(spec, m);
    const NuMinimum grid = min_nu_oracle(spec.values, m);
    const double f_hat = f_nu(spec.values, m, est.value);
    const double tol = 1e-9 * (1.0 + std::abs(grid.value));
    out.push_back({inst_seed, "nu_hat_vs_grid", f_hat, grid.value, f_hat - grid.value, tol, f_hat <= grid.value + tol});

    if (est.branch == NuEstimate::Branch::InteriorRoot) {
      const double residual = std::abs(g_nu(spec.values, est.value) - m);
      out.push_back({inst_seed, "nu_root_residual", m, g_nu(spec.values, est.value), residual, 1e-12 * m,
                     residual <= 1e-12 * m});
    }

    double worst = 0.0;
    bool slope_ok = true;
    for (const auto& c : derivative_check_g(spec, {0.0, 0.1, 1.0, est.value > 100.0 ? 100.0 : est.value, 10.0, 100.0})) {
      worst = std::max(worst, c.relative_error);
      slope_ok = slope_ok && c.pass;
    }
    out.push_back({inst_seed, "g_slope_central_difference", 0.0, 0.0, worst, 1e-5, slope_ok});
  }
  return out;
}

}  // namespace rsdetect::oracle
