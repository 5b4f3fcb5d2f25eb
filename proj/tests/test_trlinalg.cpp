#include <gtest/gtest.h>

#include <random>
#include <trgeom/trlinalg.hpp>

using namespace trgeom;

namespace {

TangentFrame tilted(double t) {
  TangentFrame F(2, 2);
  F << cd(1, 0), cd(0, std::sin(t)), cd(0, 0), cd(std::cos(t), 0);
  return F;
}

CMat random_complex(std::mt19937& rng, int n) {
  std::normal_distribution<double> N;
  CMat M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = cd(N(rng), N(rng));
  return M;
}

HermitianStructure random_hermitian(std::mt19937& rng, int n) {
  CMat A = random_complex(rng, n);
  return {A * A.adjoint() + 0.5 * CMat::Identity(n, n)};
}

}  // namespace

TEST(Trlinalg, GramExamples) {
  auto H = HermitianStructure::identity(2);
  EXPECT_LT((hermitian_gram(CMat::Identity(2, 2), H) - CMat::Identity(2, 2)).norm(), 1e-15);
  double t = 0.7, s = std::sin(t);
  CMat expect(2, 2);
  expect << 1, cd(0, -s), cd(0, s), 1;
  EXPECT_LT((hermitian_gram(tilted(t), H) - expect).norm(), 1e-14);
  std::mt19937 rng(1);
  CMat F = random_complex(rng, 2);
  EXPECT_LT((hermitian_gram(2.0 * F, H) - 4.0 * hermitian_gram(F, H)).norm(), 1e-12);
  EXPECT_THROW(hermitian_gram(CMat::Identity(3, 3), H), Error);
}

TEST(Trlinalg, TotallyRealDefect) {
  auto H = HermitianStructure::identity(2);
  EXPECT_NEAR(totally_real_defect(CMat::Identity(2, 2), H), 1.0, 1e-15);
  TangentFrame F(2, 2);
  F << 1, cd(0, 1), 0, 0;
  EXPECT_NEAR(totally_real_defect(F, H), 0.0, 1e-15);
  EXPECT_NEAR(totally_real_defect(tilted(0.4), H), std::cos(0.4), 1e-15);
  EXPECT_THROW(projections(F), Error);
  try {
    rho_j(F, H);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NearComplexPlane);
  }
}

TEST(Trlinalg, ProjectionsStandardBasis) {
  auto P = projections(CMat::Identity(3, 3));
  RMat expect = RMat::Zero(6, 6);
  expect.topLeftCorner(3, 3).setIdentity();
  EXPECT_LT((P.PL - expect).norm(), 1e-14);
}

TEST(Trlinalg, ProjectionIdentitiesRandom) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + trial % 3;
    auto P = projections(random_complex(rng, n));
    RMat I = RMat::Identity(2 * n, 2 * n), J = complex_structure(n);
    EXPECT_LT((P.PL + P.PJ - I).norm(), 1e-10);
    EXPECT_LT((P.PL * P.PJ).norm(), 1e-10);
    EXPECT_LT((P.PL * P.PL - P.PL).norm(), 1e-10);
    EXPECT_LT((J * P.PL - P.PJ * J).norm(), 1e-10);
    EXPECT_LT((J * P.PJ - P.PL * J).norm(), 1e-10);
  }
}

TEST(Trlinalg, RhoExamples) {
  auto H = HermitianStructure::identity(2);
  EXPECT_NEAR(rho_j(CMat::Identity(2, 2), H), 1.0, 1e-14);
  for (double t : {0.1, 0.9, 1.4, 1.5707})
    EXPECT_NEAR(rho_j(tilted(t), H), std::abs(std::cos(t)), 1e-12);
  EXPECT_NEAR(lagrangian_defect(tilted(0.3), H), std::sin(0.3), 1e-14);
  // a Lagrangian frame for the standard structure: a real matrix times a unitary
  std::mt19937 rng(3);
  CMat Q = random_complex(rng, 2).householderQr().householderQ();
  CMat L = Q * CMat(random_complex(rng, 2).real().cast<cd>());
  EXPECT_NEAR(rho_j(L, H), 1.0, 1e-12);
  EXPECT_LT(lagrangian_defect(L, H), 1e-12);
}

TEST(Trlinalg, RandomInvariants) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + trial % 3;
    auto H = random_hermitian(rng, n);
    CMat F = random_complex(rng, n);
    double rho = rho_j(F, H);
    EXPECT_GT(rho, 0.0);
    EXPECT_LE(rho, 1.0 + 1e-12);
    auto cv = canonical_volume_coefficients(F, H);
    EXPECT_NEAR(std::abs(cv.value), rho, 1e-10);
    EXPECT_NEAR(cv.value.imag(), 0.0, 1e-10);
    EXPECT_GT(cv.value.real(), 0.0);
    EXPECT_NEAR(rho * rho, riemannian_volume_of_ej(F, H), 1e-10);
    // invariance under positively oriented real change of frame
    RMat R = RMat::Random(n, n);
    if (R.determinant() < 0) R.col(0) *= -1;
    EXPECT_NEAR(rho_j(F * R.cast<cd>(), H), rho, 1e-9);
  }
}
