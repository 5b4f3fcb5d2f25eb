#include <gtest/gtest.h>

#include <sstream>
#include <trgeom/immersion.hpp>

using namespace trgeom;

TEST(Grid, SpectralDerivativeExactOnTrigPolys) {
  for (int N : {16, 17}) {
    GridShape g({N});
    RVec f(N), df(N);
    for (int i = 0; i < N; ++i) {
      double t = g.theta(i, 0);
      f[i] = std::cos(3 * t) + 0.5 * std::sin(5 * t);
      df[i] = -3 * std::sin(3 * t) + 2.5 * std::cos(5 * t);
    }
    EXPECT_LT((diff_matrix(N, DiffScheme::Spectral) * f - df).norm(), 1e-12);
    RMat D = diff_matrix(N, DiffScheme::FD4);
    EXPECT_LT((D + D.transpose()).norm(), 1e-12);
  }
}

TEST(Immersion, CircleTangentAndVolumes) {
  double r = 1.7;
  auto imm = circle(share(flat_chart(1)), r, 64);
  for (int i = 0; i < 64; i += 7) {
    cd expect = cd(0, 1) * r * std::exp(cd(0, imm.shape().theta(i, 0)));
    EXPECT_LT(std::abs(imm.tangent_frame(i)(0, 0) - expect) / r, 1e-6);
  }
  auto v = volume_fields(imm);
  EXPECT_LT((v.rho.array() - 1.0).abs().maxCoeff(), 1e-14);
  EXPECT_LT((v.volg.array() - r).abs().maxCoeff(), 1e-5 * r);
  auto big = circle(share(flat_chart(1)), r, 128);
  auto tv = total_volumes(big);
  EXPECT_NEAR(tv.volg, 2 * M_PI * r, 1e-8 * 2 * M_PI * r);
  EXPECT_NEAR(tv.volj, tv.volg, 1e-14);
  EXPECT_EQ(sup_norm(pullback_kahler_form(imm)), 0.0);
}

TEST(Immersion, FourthOrderStencilOption) {
  GridShape g({64});
  std::vector<CVec> pts(64);
  for (int i = 0; i < 64; ++i) pts[i] = CVec::Constant(1, std::exp(cd(0, g.theta(i, 0))));
  GridImmersion imm4(share(flat_chart(1)), g, pts, {}, 4, false);
  double err4 = std::abs(imm4.tangent_frame(0)(0, 0) - cd(0, 1));
  GridShape g2({128});
  std::vector<CVec> pts2(128);
  for (int i = 0; i < 128; ++i) pts2[i] = CVec::Constant(1, std::exp(cd(0, g2.theta(i, 0))));
  GridImmersion imm4b(share(flat_chart(1)), g2, pts2, {}, 4, false);
  double err4b = std::abs(imm4b.tangent_frame(0)(0, 0) - cd(0, 1));
  EXPECT_GT(err4 / err4b, 14.0);
}

TEST(Immersion, ConstantMapInvalid) {
  GridShape g({16});
  GridImmersion imm(share(flat_chart(1)), g, std::vector<CVec>(16, CVec::Constant(1, 0.3)));
  EXPECT_FALSE(imm.valid());
  try {
    imm.tangent_frame(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidImmersion);
  }
}

TEST(Immersion, CliffordTorusIsLagrangian) {
  auto imm = clifford_torus(share(fubini_study(2)), 32);
  for (int i = 0; i < imm.size(); ++i) EXPECT_GT(totally_real_defect(imm.tangent_frame(i)), 0.1);
  auto v = volume_fields(imm);
  EXPECT_LT((v.rho.array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_LT(sup_norm(pullback_kahler_form(imm)), 1e-8);
  EXPECT_LT(sup_norm(pullback_ricci_form(imm)), 1e-8);
}

TEST(Immersion, TiltedLinearTorus) {
  double t = 0.6;
  CMat V(2, 2);
  V << 1, cd(0, std::sin(t)), 0, std::cos(t);
  auto imm = linear_torus(flat_chart(2), V, 16);
  auto v = volume_fields(imm);
  EXPECT_LT((v.rho.array() - std::cos(t)).abs().maxCoeff(), 1e-12);
  auto tv = total_volumes(imm);
  EXPECT_NEAR(tv.volj / tv.volg, std::cos(t), 1e-12);
  EXPECT_LT((imm.tangent_frame(3) - V).norm(), 1e-12);
}

TEST(Immersion, RandomTorusVolJBelowVolg) {
  for (unsigned seed = 1; seed <= 3; ++seed) {
    auto imm = random_torus(share(flat_chart(2)), 24, seed);
    auto tv = total_volumes(imm);
    EXPECT_LT(tv.volj, tv.volg * (1 - 1e-4));
  }
}

TEST(Immersion, TwistedSeamConsistency) {
  // core geodesic: tangent by twisted FD agrees with the closed form
  double ell = 1.3;
  auto imm = core_geodesic(ell, 1.0, 40);
  for (int i : {0, 1, 38, 39}) {
    cd z = imm.point(i)[0];
    EXPECT_LT(std::abs(imm.tangent_frame(i)(0, 0) - z * (ell / (2 * M_PI))) / std::abs(z), 1e-6);
  }
  // perturbed twisted curve: seam derivative vs one-sided interior difference
  GridShape g({64});
  std::vector<CVec> pts(64);
  for (int i = 0; i < 64; ++i) {
    double th = g.theta(i, 0);
    pts[i] = CVec::Constant(1, cd(0.2 * std::sin(th), 1.0) * std::exp(ell * th / (2 * M_PI)));
  }
  GridImmersion tw(imm.chart_ptr(), g, pts, {0});
  double h = g.spacing(0);
  cd interior = (pts[2][0] - pts[0][0]) / (2 * h);
  double th = g.theta(1, 0);
  cd exact = std::exp(ell * th / (2 * M_PI)) * (cd(0.2 * std::cos(th), 0) + cd(0.2 * std::sin(th), 1.0) * (ell / (2 * M_PI)));
  EXPECT_LT(std::abs(tw.tangent_frame(0)(0, 0) - cd(0, 1.0) * (ell / (2 * M_PI)) - cd(0.2, 0)), 1e-6);
  EXPECT_LT(std::abs(interior - exact), 5e-3);
}

TEST(Immersion, CsvRoundTrip) {
  auto imm = random_torus(share(fubini_study(2)), 12, 4);
  std::stringstream ss;
  write_csv(imm, ss);
  auto back = read_csv(imm.chart_ptr(), ss);
  ASSERT_EQ(back.size(), imm.size());
  for (int i = 0; i < imm.size(); ++i) EXPECT_LT((back.point(i) - imm.point(i)).norm(), 1e-15);
}

TEST(Intrinsic, CircleLaplacianAndIdentities) {
  auto imm = circle(share(flat_chart(1)), 1.0, 128);
  IntrinsicCalculus ic(imm);
  RVec f(128);
  for (int k : {1, 3, 7}) {
    for (int i = 0; i < 128; ++i) f[i] = std::cos(k * imm.shape().theta(i, 0));
    RVec lap = ic.laplacian(f);
    EXPECT_LT((lap - k * k * f).norm() / (k * k * f.norm()), 1e-6);
  }
  RVec c = RVec::Constant(128, 2.0);
  EXPECT_LT(ic.d(c).norm(), 1e-10);
  EXPECT_LT(ic.div(ic.grad(c)).norm(), 1e-10);
}

TEST(Intrinsic, AdjointnessAndDivergenceTheorem) {
  auto imm = random_torus(share(fubini_study(2)), 32, 9);
  IntrinsicCalculus ic(imm);
  std::mt19937 rng(1);
  std::normal_distribution<double> N;
  // smooth random fields from low modes
  auto smooth = [&]() {
    RVec f = RVec::Zero(imm.size());
    for (int p = -2; p <= 2; ++p)
      for (int q = -2; q <= 2; ++q) {
        double a = N(rng), b = N(rng);
        for (int i = 0; i < imm.size(); ++i) {
          double ph = p * imm.shape().theta(i, 0) + q * imm.shape().theta(i, 1);
          f[i] += a * std::cos(ph) + b * std::sin(ph);
        }
      }
    return f;
  };
  RVec f = smooth();
  RMat beta(imm.size(), 2);
  beta.col(0) = smooth();
  beta.col(1) = smooth();
  double lhs = ic.inner(ic.d(f), beta), rhs = ic.integrate(f.cwiseProduct(ic.codiff(beta)));
  EXPECT_LT(std::abs(lhs - rhs) / std::abs(lhs), 1e-6);
  EXPECT_LT(std::abs(ic.integrate(ic.div(beta))), 1e-9 * beta.norm());
  // d d = 0
  EXPECT_LT(sup_norm(ic.d(ic.d(f))), 1e-9 * f.norm());
}
