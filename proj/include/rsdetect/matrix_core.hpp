#pragma once

// Complex Hermitian primitives shared by the detectors: whitening,
// projectors, PSD spectra and log-determinants of I + M/scale.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "rsdetect/error.hpp"

namespace rsdetect {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
/// Square complex matrix expected to satisfy M == M^H.
using HermitianMatrix = Eigen::MatrixXcd;

inline constexpr double kHermitianTol = 1e-12;

/// Nonzero eigenvalues of a PSD matrix, descending. `values` holds every
/// eigenvalue; only the first `rank` count as nonzero.
struct EigenSpectrum {
  std::vector<double> values;
  int rank = 0;
  double tolerance_used = 0.0;

  /// Eigenvalues above the rank tolerance.
  std::vector<double> nonzero() const { return {values.begin(), values.begin() + rank}; }
};

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

inline void require_finite(const ComplexMatrix& m, const char* what) {
  if (!all_finite(m)) throw Error(ErrorCode::InvalidInput, std::string(what) + " has non-finite entries");
}

inline HermitianMatrix symmetrize(const ComplexMatrix& m) {
  return (m + m.adjoint()) * 0.5;
}

/// Largest |M(i,j) - conj(M(j,i))|.
inline double hermitian_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const ComplexMatrix& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw Error(ErrorCode::InvalidInput, std::string(what) + " must be square and non-empty");
  require_finite(m, what);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (hermitian_defect(m) > kHermitianTol * scale)
    throw Error(ErrorCode::InvalidInput, std::string(what) + " is not Hermitian");
}

/// Eigenvalues of a Hermitian PSD matrix, sorted descending, with the
/// numerical-rank rule  lambda > dim * eps * max(lambda_max, 1).
inline EigenSpectrum eigvals_psd(const HermitianMatrix& m) {
  require_hermitian(m, "eigvals_psd input");
  const auto dim = m.rows();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(symmetrize(m), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidInput, "eigendecomposition failed");

  const Eigen::VectorXd& ev = solver.eigenvalues();  // ascending
  EigenSpectrum out;
  out.values.resize(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) out.values[static_cast<std::size_t>(i)] = ev(dim - 1 - i);

  const double eps = std::numeric_limits<double>::epsilon();
  const double tol = static_cast<double>(dim) * eps * std::max(out.values.front(), 1.0);
  out.tolerance_used = tol;
  for (double& lambda : out.values) {
    if (lambda < -tol) throw Error(ErrorCode::NotPositiveSemidefinite, "eigenvalue " + std::to_string(lambda));
    if (lambda < 0.0) lambda = 0.0;
    if (lambda > tol) ++out.rank;
  }
  return out;
}

/// Unique Hermitian PD T with T S T = I.
inline HermitianMatrix inv_sqrt(const HermitianMatrix& s) {
  require_hermitian(s, "inv_sqrt input");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(symmetrize(s));
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidInput, "eigendecomposition failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const double eps = std::numeric_limits<double>::epsilon();
  const double largest = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() <= static_cast<double>(s.rows()) * eps * largest)
    throw Error(ErrorCode::SingularMatrix, "matrix is singular or indefinite");
  const Eigen::VectorXd d = ev.cwiseSqrt().cwiseInverse();
  const ComplexMatrix& u = solver.eigenvectors();
  return symmetrize(u * d.asDiagonal() * u.adjoint());
}

/// log det(I + M/scale) from an already computed spectrum.
inline double logdet_id_plus(const EigenSpectrum& spectrum, double scale) {
  double acc = 0.0;
  for (double lambda : spectrum.values) acc += std::log1p(lambda / scale);
  return acc;
}

inline double logdet_id_plus(const HermitianMatrix& m, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidInput, "scale must be positive");
  return logdet_id_plus(eigvals_psd(m), scale);
}

/// I - vt vt^H / (vt^H vt).
inline HermitianMatrix complement_projector(const ComplexVector& vt) {
  require_finite(vt, "projector direction");
  const double norm2 = vt.squaredNorm();
  if (vt.size() == 0 || norm2 == 0.0) throw Error(ErrorCode::InvalidInput, "projector direction is zero");
  const auto n = vt.size();
  return symmetrize(ComplexMatrix::Identity(n, n) - vt * vt.adjoint() / norm2);
}

/// Lower Cholesky factor L with L L^H = S; W = L^{-1} whitens S to I.
/// Cheaper than inv_sqrt and equivalent for every unitarily invariant quantity.
inline Eigen::LLT<ComplexMatrix> cholesky_pd(const HermitianMatrix& s) {
  require_hermitian(s, "covariance");
  Eigen::LLT<ComplexMatrix> llt(s);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularMatrix, "Cholesky factorization failed");
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal().real();
  const double ratio = diag.minCoeff() / diag.maxCoeff();
  const double eps = std::numeric_limits<double>::epsilon();
  if (ratio * ratio <= static_cast<double>(s.rows()) * eps)
    throw Error(ErrorCode::SingularMatrix, "matrix is numerically singular");
  return llt;
}

}  // namespace rsdetect
