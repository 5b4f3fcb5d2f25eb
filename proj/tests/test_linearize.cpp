#include <gtest/gtest.h>

#include <random>

#include "trgeom/linearize.hpp"

using namespace trgeom;

namespace {

RVec smooth_function(const GridShape& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  RVec f = RVec::Zero(g.size());
  for (int m = 0; m < 6; ++m) {
    std::vector<int> k(g.axes());
    for (int a = 0; a < g.axes(); ++a) k[a] = static_cast<int>(rng() % 5) - 2;
    double c = nd(rng), s = nd(rng);
    for (int i = 0; i < g.size(); ++i) {
      double ph = 0;
      for (int a = 0; a < g.axes(); ++a) ph += k[a] * g.theta(i, a);
      f[i] += c * std::cos(ph) + s * std::sin(ph);
    }
  }
  return f;
}

RMat smooth_field(const GridShape& g, int n, unsigned seed) {
  RMat Y(g.size(), n);
  for (int a = 0; a < n; ++a) Y.col(a) = smooth_function(g, seed + 17 * a);
  return Y;
}

double vol_j(const GridImmersion& imm) { return total_volumes(imm).volj; }

GridImmersion linear_displace(const GridImmersion& imm, const RMat& Y, double t) {
  return displace(imm, j_pushforward(imm, Y), t);
}

}  // namespace

TEST(Linearize, RicciEndomorphismSigns) {
  auto core = core_geodesic(2.0, 2.0, 65);
  auto ric = ricci_endomorphism(core);
  EXPECT_EQ(ric.sign, -1);
  auto g = induced_metric(core);
  for (int i = 0; i < core.size(); ++i) EXPECT_NEAR(ric.A[i](0, 0), -1.0, 1e-12);

  auto eq = circle(share(fubini_study(1)), 1.0, 64);
  EXPECT_EQ(ricci_endomorphism(eq).sign, 1);
}

TEST(Linearize, FlatTorusHasSingularA) {
  auto flat = linear_torus(flat_chart(2), CMat::Identity(2, 2), 16);
  try {
    ricci_endomorphism(flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularA);
  }
}

TEST(Linearize, CoreGeodesicSpectrum) {
  const double ell = 2.0;
  auto core = core_geodesic(ell, 2.0, 129);
  auto op = operator_Ltilde(core);
  RVec ev = spectrum(op, 6);
  // L~ = Delta + 1 on a closed geodesic of length ell, curvature -1
  std::vector<double> expect;
  for (int k = 1; k <= 3; ++k) expect.insert(expect.end(), 2, 1.0 + std::pow(2 * M_PI * k / ell, 2));
  ASSERT_EQ(ev.size(), 6);
  for (int j = 0; j < 6; ++j) EXPECT_NEAR(ev[j], expect[j], 1e-8 * expect[j]);
}

TEST(Linearize, CoreGeodesicSpectrumGeneralCurvature) {
  // c = 1: length sqrt(c / 2) ell and lambda = -2 / c
  const double ell = 3.0, c = 1.0;
  auto core = core_geodesic(ell, c, 129);
  auto op = operator_Ltilde(core);
  RVec ev = spectrum(op, 2);
  double len = std::sqrt(c / 2) * ell;
  EXPECT_NEAR(ev[0], 1.0 + std::pow(2 * M_PI / len, 2) / (2.0 / c), 1e-8);
}

TEST(Linearize, KahlerEinsteinSimplification) {
  auto fs = share(fubini_study(2));
  auto cl = clifford_torus(fs, 24);
  auto op = operator_Ltilde(cl, std::numeric_limits<double>::infinity());
  IntrinsicCalculus ic(cl);
  RVec f = smooth_function(cl.shape(), 4);
  double lambda = *fs->einstein_constant();
  RVec expect = -ic.laplacian(f) / lambda + f;
  EXPECT_LT((op.apply(f) - expect).cwiseAbs().maxCoeff(), 1e-8 * expect.cwiseAbs().maxCoeff());
}

TEST(Linearize, NotCriticalGate) {
  auto c = circle(share(fubini_study(1)), 0.5, 32);
  try {
    operator_Ltilde(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotCritical);
  }
  try {
    second_variation_at_critical(c, RMat::Ones(32, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotCritical);
  }
}

TEST(Linearize, IdentitySpectrum) {
  auto op = identity_operator(20);
  RVec ev = spectrum(op, 5);
  for (int j = 0; j < ev.size(); ++j) EXPECT_NEAR(ev[j], 1.0, 1e-14);
}

TEST(Linearize, LOnExactFormsMatchesLtilde) {
  auto core = core_geodesic(2.0, 2.0, 65);
  auto L = operator_L(core);
  auto Lt = operator_Ltilde(core);
  IntrinsicCalculus ic(core);
  RVec f = smooth_function(core.shape(), 9);
  RVec lhs = L.apply(flatten(ic.d(f)));
  RVec rhs = flatten(ic.d(Lt.apply(f)));
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8 * rhs.cwiseAbs().maxCoeff());
}

TEST(Linearize, FirstVariationMatchesFiniteDifference) {
  {
    auto c = circle(share(fubini_study(1)), 0.5, 64);
    RMat Y = RMat::Constant(64, 1, 0.3);
    double t = 1e-4;
    double fd = (vol_j(linear_displace(c, Y, t)) - vol_j(linear_displace(c, Y, -t))) / (2 * t);
    double an = first_variation(c, Y);
    EXPECT_NEAR(an, fd, 1e-5 * std::abs(fd));
  }
  {
    auto tor = random_torus(share(fubini_study(2)), 48, 5);
    RMat Y = 0.2 * smooth_field(tor.shape(), 2, 3);
    double t = 1e-4;
    double fd = (vol_j(linear_displace(tor, Y, t)) - vol_j(linear_displace(tor, Y, -t))) / (2 * t);
    double an = first_variation(tor, Y);
    EXPECT_NEAR(an, fd, 1e-5 * std::abs(fd));
  }
}

TEST(Linearize, SecondVariationAtCoreGeodesic) {
  auto core = core_geodesic(2.0, 2.0, 129);
  RMat Y = 0.1 * smooth_field(core.shape(), 1, 11);
  double t = 1e-3;
  double fd = (vol_j(linear_displace(core, Y, t)) - 2 * vol_j(core) + vol_j(linear_displace(core, Y, -t))) / (t * t);
  double an = second_variation_at_critical(core, Y);
  EXPECT_NEAR(an, fd, 1e-3 * std::abs(fd));
}

TEST(Linearize, SecondVariationAtEquator) {
  auto eq = circle(share(fubini_study(1)), 1.0, 64);
  RMat Y = 0.1 * smooth_field(eq.shape(), 1, 2);
  double t = 1e-3;
  double fd = (vol_j(linear_displace(eq, Y, t)) - 2 * vol_j(eq) + vol_j(linear_displace(eq, Y, -t))) / (t * t);
  EXPECT_NEAR(second_variation_at_critical(eq, Y), fd, 1e-3 * std::abs(fd));
}

TEST(Linearize, DMaslovMatchesFiniteDifference) {
  auto core = core_geodesic(2.0, 2.0, 129);
  RMat Y = 0.1 * smooth_field(core.shape(), 1, 6);
  auto V = j_pushforward(core, Y);
  double t = 1e-4;
  RMat fd = (maslov_form(ambient_displace(core, V, t)).xi - maslov_form(ambient_displace(core, V, -t)).xi) / (2 * t);
  RMat an = d_maslov(core, Y);
  EXPECT_LT((an - fd).cwiseAbs().maxCoeff(), 1e-3 * fd.cwiseAbs().maxCoeff());
}

TEST(Linearize, TangentialDirectionsAreInKernel) {
  auto core = core_geodesic(2.0, 2.0, 129);
  RMat X = smooth_field(core.shape(), 1, 8);
  std::vector<CVec> v(core.size());
  for (int i = 0; i < core.size(); ++i) v[i] = core.tangent_frame(i) * RVec(X.row(i).transpose()).cast<cd>();
  double t = 1e-4;
  RMat fd = (maslov_form(displace(core, v, t)).xi - maslov_form(displace(core, v, -t)).xi) / (2 * t);
  EXPECT_LT(fd.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Linearize, WeinsteinChartFirstOrderAgreement) {
  auto core = core_geodesic(2.0, 2.0, 65);
  IntrinsicCalculus ic(core);
  RMat alpha = ic.d(smooth_function(core.shape(), 13));
  alpha *= 1e-3 / alpha.cwiseAbs().maxCoeff();
  auto a = weinstein_immersion(core, alpha, WeinsteinChart::FirstOrder);
  auto b = weinstein_immersion(core, alpha, WeinsteinChart::SymplecticNormal);
  double diff = 0;
  for (int i = 0; i < core.size(); ++i) diff = std::max(diff, (a.point(i) - b.point(i)).norm());
  EXPECT_LT(diff, 1e-5);
  EXPECT_EQ(weinstein_immersion(core, RMat::Zero(65, 1)).point(3), core.point(3));
}

TEST(Linearize, SymplecticNormalChartKeepsMaslovExact) {
  auto core = core_geodesic(2.0, 2.0, 129);
  IntrinsicCalculus ic(core);
  for (unsigned seed = 1; seed <= 3; ++seed) {
    RMat alpha = ic.d(smooth_function(core.shape(), seed));
    alpha *= 0.05 / alpha.cwiseAbs().maxCoeff();
    auto moved = weinstein_immersion(core, alpha);
    EXPECT_LT(std::abs(loop_integrals(moved, maslov_form(moved).xi)[0]), 1e-9);
  }
}

TEST(Linearize, SymplecticNormalChartSweepsArea) {
  // closed curve in CP^1: the enclosed rho-area changes by minus the integral of alpha
  auto fs = share(fubini_study(1));
  auto c = circle(fs, 0.6, 96);
  RMat alpha = RMat::Constant(96, 1, 0.02);
  auto moved = weinstein_immersion(c, alpha);
  double before = loop_integrals(c, maslov_form(c).xi)[0];
  double after = loop_integrals(moved, maslov_form(moved).xi)[0];
  double swept = 2 * M_PI * 0.02;
  EXPECT_NEAR(std::abs(after - before), swept, 1e-9);
}

TEST(Linearize, EigenpairsSatisfyEigenEquation) {
  auto core = core_geodesic(2.0, 2.0, 65);
  auto op = operator_Ltilde(core);
  auto ep = eigenpairs(op, 4);
  for (int j = 0; j < 4; ++j) {
    RVec v = ep.vectors.col(j);
    EXPECT_NEAR(v.dot(op.weight), 0.0, 1e-10);
    EXPECT_NEAR(v.cwiseProduct(op.weight).dot(v), 1.0, 1e-10);
    EXPECT_LT((op.apply(v) - ep.values[j] * v).cwiseAbs().maxCoeff(), 1e-8 * ep.values[j]);
  }
}
