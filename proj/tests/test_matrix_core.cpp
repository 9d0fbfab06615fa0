#include <gtest/gtest.h>

#include <cmath>

#include "rsdetect/detectors.hpp"
#include "rsdetect/matrix_core.hpp"
#include "rsdetect/oracle.hpp"
#include "test_util.hpp"

using namespace rsdetect;
using rsdetect::testing::random_complex;
using rsdetect::testing::random_scatter;

namespace {

HermitianMatrix diag(std::initializer_list<double> d) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return v.cast<cplx>().asDiagonal();
}

}  // namespace

TEST(EigvalsPsd, Identity) {
  const auto s = eigvals_psd(ComplexMatrix::Identity(3, 3));
  EXPECT_EQ(s.values, (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(s.rank, 3);
}

TEST(EigvalsPsd, ZeroMatrix) {
  const auto s = eigvals_psd(ComplexMatrix::Zero(4, 4));
  EXPECT_EQ(s.values, (std::vector<double>{0, 0, 0, 0}));
  EXPECT_EQ(s.rank, 0);
}

TEST(EigvalsPsd, DiagonalSortedDescending) {
  const auto s = eigvals_psd(diag({1, 3, 0}));
  ASSERT_EQ(s.values.size(), 3u);
  EXPECT_NEAR(s.values[0], 3, 1e-15);
  EXPECT_NEAR(s.values[1], 1, 1e-15);
  EXPECT_EQ(s.values[2], 0);
  EXPECT_EQ(s.rank, 2);
}

TEST(EigvalsPsd, RejectsNonHermitian) {
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  m(0, 1) = cplx(0.5, 0);
  try {
    eigvals_psd(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
}

TEST(EigvalsPsd, RejectsIndefinite) {
  try {
    eigvals_psd(diag({1, -0.5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveSemidefinite);
  }
}

TEST(EigvalsPsd, ClampsRoundingNegatives) {
  const auto s = eigvals_psd(diag({2, -1e-17}));
  EXPECT_EQ(s.values[1], 0.0);
  EXPECT_EQ(s.rank, 1);
}

TEST(InvSqrt, IdentityAndDiagonal) {
  EXPECT_LE((inv_sqrt(ComplexMatrix::Identity(3, 3)) - ComplexMatrix::Identity(3, 3)).norm(), 1e-15);
  EXPECT_LE((inv_sqrt(diag({4, 9})) - diag({0.5, 1.0 / 3.0})).norm(), 1e-15);
}

TEST(InvSqrt, MultiplyBackRandom) {
  Engine engine(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 15;
    const HermitianMatrix s = random_scatter(n, 2 * n, engine);
    const HermitianMatrix t = inv_sqrt(s);
    EXPECT_LE(hermitian_defect(t), 1e-12 * t.norm());
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    EXPECT_LE((t * s * t - id).norm() / id.norm(), 1e-10) << "n=" << n;
  }
}

TEST(InvSqrt, SingularRejected) {
  try {
    inv_sqrt(diag({1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularMatrix);
  }
}

TEST(LogdetIdPlus, FrozenValues) {
  EXPECT_EQ(logdet_id_plus(ComplexMatrix::Zero(3, 3), 5.0), 0.0);
  EXPECT_NEAR(logdet_id_plus(diag({3, 1}), 1.0), 2.0794415416798357, 1e-14);
  EXPECT_NEAR(logdet_id_plus(diag({3, 1}), 2.0), 1.3217558399823195, 1e-14);
}

TEST(LogdetIdPlus, MatchesDenseDeterminant) {
  Engine engine(11);
  for (int n = 1; n <= 6; ++n)
    for (int rep = 0; rep < 10; ++rep) {
      const ComplexMatrix x = random_complex(n, 1 + rep % 4, engine);
      const HermitianMatrix m = symmetrize(x * x.adjoint());
      const double dense = std::log(oracle::dense_det(m + ComplexMatrix::Identity(n, n)).real());
      EXPECT_LE(rsdetect::testing::rel_diff(logdet_id_plus(m, 1.0), dense), 1e-9);
    }
}

TEST(LogdetIdPlus, RejectsNonPositiveScale) {
  EXPECT_THROW(logdet_id_plus(diag({1, 1}), 0.0), Error);
}

TEST(ComplementProjector, AxisAndDiagonal) {
  ComplexVector e1(2);
  e1 << 1.0, 0.0;
  ComplexMatrix expect(2, 2);
  expect << 0.0, 0.0, 0.0, 1.0;
  EXPECT_LE((complement_projector(e1) - expect).norm(), 1e-15);

  ComplexVector d(2);
  d << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  expect << 0.5, -0.5, -0.5, 0.5;
  EXPECT_LE((complement_projector(d) - expect).norm(), 1e-15);
}

TEST(ComplementProjector, IdempotentHermitianAnnihilates) {
  Engine engine(3);
  for (int rep = 0; rep < 30; ++rep) {
    const ComplexVector vt = random_complex(2 + rep % 10, 1, engine).col(0);
    const HermitianMatrix p = complement_projector(vt);
    EXPECT_LE((p * p - p).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(hermitian_defect(p), 1e-12);
    EXPECT_LE((p * vt).norm(), 1e-12 * vt.norm());
  }
}

TEST(ComplementProjector, ZeroVectorRejected) {
  EXPECT_THROW(complement_projector(ComplexVector::Zero(3)), Error);
}

// The N x N projected matrix and the K_P x K_P Gram form share nonzero eigenvalues.
TEST(Spectra, FullAndReducedFormsAgree) {
  Engine engine(5);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 4 + rep % 12;
    const int kp = 1 + rep % 4;
    const ComplexMatrix z = random_complex(n, kp, engine);
    const HermitianMatrix s = random_scatter(n, 2 * n, engine);
    const ComplexVector v = random_complex(n, 1, engine).col(0);
    const HermitianMatrix t = inv_sqrt(s);
    const HermitianMatrix p = complement_projector(t * v);
    const auto full = eigvals_psd(symmetrize(p * t * z * z.adjoint() * t * p));
    const auto reduced = eigvals_psd(symmetrize(z.adjoint() * t * p * t * z));
    ASSERT_EQ(full.rank, reduced.rank);
    for (int i = 0; i < full.rank; ++i)
      EXPECT_LE(rsdetect::testing::rel_diff(full.values[i], reduced.values[i]), 1e-9);
  }
}
