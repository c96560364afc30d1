#include "swipt/matkernel.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace swipt;
using swipt::testing::random_hermitian;
using swipt::testing::random_psd;

TEST(HermitianEig, IdentityHasUnitSpectrum) {
  const auto ep = hermitian_eig(CMatrix::Identity(3, 3));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(ep.values(k), 1.0, 1e-14);
}

TEST(HermitianEig, RankOneOuterProduct) {
  CVector g(2);
  g << 1.0 / std::sqrt(2.0), cplx(0, 1) / std::sqrt(2.0);
  const auto ep = hermitian_eig(4.0 * outer(g));
  EXPECT_NEAR(ep.values(0), 4.0, 1e-13);
  EXPECT_NEAR(ep.values(1), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(ep.vectors.col(0).dot(g)), 1.0, 1e-13);
}

TEST(HermitianEig, RandomReconstructionAndOrdering) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix m = random_hermitian(rng, 4);
    const auto ep = hermitian_eig(m);
    const CMatrix rec = ep.vectors * ep.values.cast<cplx>().asDiagonal() * ep.vectors.adjoint();
    EXPECT_LT((rec - m).norm(), 1e-9);
    for (int k = 0; k + 1 < 4; ++k) EXPECT_GE(ep.values(k), ep.values(k + 1));
    const double scale = 1.0 + spectral_norm_hermitian(m);
    for (int k = 0; k < 4; ++k)
      EXPECT_LT((m * ep.vectors.col(k) - ep.values(k) * ep.vectors.col(k)).norm(), 1e-9 * scale);
  }
}

TEST(HermitianEig, DeterministicForFixedInput) {
  std::mt19937_64 rng(3);
  const CMatrix m = random_hermitian(rng, 5);
  const auto a = hermitian_eig(m);
  const auto b = hermitian_eig(m);
  EXPECT_EQ(a.vectors, b.vectors);
  EXPECT_EQ(a.values, b.values);
}

TEST(HermitianEig, RejectsNonHermitian) {
  CMatrix m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_THROW(hermitian_eig(m), ContractError);
}

TEST(RangeNullSplit, FullRankIdentity) {
  const auto s = range_null_split(CMatrix::Identity(4, 4));
  EXPECT_EQ(s.rank, 4);
  EXPECT_EQ(s.null_basis.cols(), 0);
}

TEST(RangeNullSplit, ProjectorRemovesChannelDirection) {
  std::mt19937_64 rng(11);
  const CVector g = swipt::testing::random_vector(rng, 4);
  const double lam0 = 2.5;
  const CMatrix a = lam0 * CMatrix::Identity(4, 4) - lam0 / g.squaredNorm() * outer(g);
  const auto s = range_null_split(a);
  ASSERT_EQ(s.rank, 3);
  EXPECT_NEAR(std::abs(s.null_basis.col(0).dot(g)) / g.norm(), 1.0, 1e-12);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(s.eigenvalues(k), lam0, 1e-12);
}

TEST(RangeNullSplit, ZeroMatrix) {
  const auto s = range_null_split(CMatrix::Zero(3, 3));
  EXPECT_EQ(s.rank, 0);
  EXPECT_LT((s.null_basis.adjoint() * s.null_basis - CMatrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(RangeNullSplit, BasesAreOrthonormalAndReconstruct) {
  std::mt19937_64 rng(5);
  for (int rank = 0; rank <= 5; ++rank) {
    const CMatrix a = random_psd(rng, 5, rank);
    const auto s = range_null_split(a);
    EXPECT_EQ(s.rank, rank);
    const CMatrix u1 = s.range_basis, u2 = s.null_basis;
    EXPECT_LT((u1.adjoint() * u1 - CMatrix::Identity(rank, rank)).norm(), 1e-10);
    EXPECT_LT((u2.adjoint() * u2 - CMatrix::Identity(5 - rank, 5 - rank)).norm(), 1e-10);
    EXPECT_LT((u1.adjoint() * u2).norm(), 1e-10);
    EXPECT_LT((u1 * u1.adjoint() + u2 * u2.adjoint() - CMatrix::Identity(5, 5)).norm(), 1e-9);
    const CMatrix rec = u1 * s.eigenvalues.cast<cplx>().asDiagonal() * u1.adjoint();
    EXPECT_LT((rec - a).norm(), 1e-9 * (1.0 + a.norm()));
    EXPECT_NEAR(s.eigenvalues.sum(), trace_real(a), 1e-9 * (1.0 + trace_real(a)));
    EXPECT_TRUE((s.eigenvalues.array() >= 0).all());
  }
}

TEST(RangeNullSplit, NotPsdThrows) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 1;
  m(1, 1) = -1;
  EXPECT_THROW(range_null_split(m), NotPsdError);
}

TEST(RangeNullSplit, ScalarInputAccepted) {
  CMatrix m(1, 1);
  m(0, 0) = 3.0;
  EXPECT_EQ(range_null_split(m).rank, 1);
}

TEST(IsPsd, BasicCases) {
  EXPECT_TRUE(is_psd(CMatrix::Identity(3, 3)));
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 1;
  m(1, 1) = -1;
  EXPECT_FALSE(is_psd(m));
}

TEST(IsPsd, AgreesWithEigenvaluesAtDualPoint) {
  std::mt19937_64 rng(9);
  const CVector g1 = swipt::testing::random_vector(rng, 3), g2 = swipt::testing::random_vector(rng, 3);
  for (double l1 : {0.0, 0.05, 0.2, 1.0}) {
    const CMatrix a = CMatrix::Identity(3, 3) - l1 * outer(g1) - 0.1 * outer(g2);
    EXPECT_EQ(is_psd(a), hermitian_eig(a).values(2) >= -1e-9 * (1.0 + spectral_norm_hermitian(a)));
  }
}

TEST(Embedding, IdentityAndKnownSpectrum) {
  EXPECT_EQ(complex_to_real_embedding(CMatrix::Identity(2, 2)), RMatrix::Identity(4, 4));
  CMatrix m(2, 2);
  m << 0, cplx(0, 1), cplx(0, -1), 0;
  const RMatrix e = complex_to_real_embedding(m);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(e);
  EXPECT_NEAR(es.eigenvalues()(0), -1, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(1), -1, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(2), 1, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(3), 1, 1e-14);
}

TEST(Embedding, SpectrumDoubledAndPsdPreserved) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const CMatrix m = trial % 2 ? random_psd(rng, 3, 1 + trial % 3) : random_hermitian(rng, 3);
    const RMatrix e = complex_to_real_embedding(m);
    EXPECT_NEAR(e.trace(), 2 * trace_real(m), 1e-12);
    const RVector ce = hermitian_eig(m).values;
    RVector re = Eigen::SelfAdjointEigenSolver<RMatrix>(e).eigenvalues().reverse();
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(re(2 * k), ce(k), 1e-9);
      EXPECT_NEAR(re(2 * k + 1), ce(k), 1e-9);
    }
    const bool psd_c = is_psd(m);
    const bool psd_r = Eigen::SelfAdjointEigenSolver<RMatrix>(e).eigenvalues()(0) >= -1e-9 * (1.0 + e.norm());
    EXPECT_EQ(psd_c, psd_r);
    EXPECT_LT((real_to_complex_projection(e) - m).norm(), 1e-13);
  }
}
