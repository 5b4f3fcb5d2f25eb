#include <gtest/gtest.h>

#include <random>
#include <trgeom/kahler.hpp>

using namespace trgeom;

namespace {

CVec random_point(std::mt19937& rng, int n, double radius) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  CVec z(n);
  for (int k = 0; k < n; ++k) z[k] = cd(U(rng), U(rng));
  return z * (radius / std::sqrt(2.0 * n));
}

// 4th-order central difference of h along real variable a
CMat fd_metric(const KahlerChart& ch, CVec z, int a, double step) {
  auto at = [&](double s) {
    CVec w = z;
    if (a % 2 == 0)
      w[a / 2] += s;
    else
      w[a / 2] += cd(0, s);
    return metric_at(ch, w).h;
  };
  return (-at(2 * step) + 8.0 * at(step) - 8.0 * at(-step) + at(-2 * step)) / (12 * step);
}

// Hessian h of the potential by finite differences on K itself
CMat fd_levi(const KahlerChart& ch, const CVec& z, double step) {
  int n = ch.n();
  std::vector<double> x(2 * n);
  for (int k = 0; k < n; ++k) x[2 * k] = z[k].real(), x[2 * k + 1] = z[k].imag();
  auto K2 = [&](int a, int b) {
    auto ev = [&](double sa, double sb) {
      auto y = x;
      y[a] += sa;
      y[b] += sb;
      return ch.potential(y.data());
    };
    return (ev(step, step) - ev(step, -step) - ev(-step, step) + ev(-step, -step)) / (4 * step * step);
  };
  CMat h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      h(i, j) = 0.5 * cd(K2(2 * i, 2 * j) + K2(2 * i + 1, 2 * j + 1), K2(2 * i, 2 * j + 1) - K2(2 * i + 1, 2 * j));
  return h;
}

}  // namespace

TEST(Kahler, MetricExamples) {
  CVec z0 = CVec::Zero(1);
  EXPECT_LT((metric_at(flat_chart(2), CVec::Ones(2)).h - CMat::Identity(2, 2)).norm(), 1e-14);
  // h = 2 d dbar K: both curved charts give 2c at the origin under the convention record
  EXPECT_NEAR(metric_at(fubini_study(1), z0).h(0, 0).real(), 2.0, 1e-14);
  EXPECT_NEAR(metric_at(complex_ball(1), z0).h(0, 0).real(), 2.0, 1e-14);
  CVec z(1);
  z[0] = cd(0.3, -0.4);
  EXPECT_NEAR(metric_at(fubini_study(1, 1.5), z).h(0, 0).real(), 2 * 1.5 / std::pow(1 + 0.25, 2), 1e-13);
  EXPECT_NEAR(metric_at(upper_half_plane(2.0), CVec::Constant(1, cd(0.1, 0.5))).h(0, 0).real(), 2.0 / (2 * 0.25),
              1e-12);
  EXPECT_THROW(metric_at(complex_ball(1), CVec::Constant(1, 1.2)), Error);
  EXPECT_THROW(metric_at(upper_half_plane(), CVec::Constant(1, cd(0, -1))), Error);
}

TEST(Kahler, JetMetricMatchesPotentialFiniteDifferences) {
  std::mt19937 rng(5);
  std::vector<Perturbation> perts{GaussianBump{0.3, CVec::Constant(2, cd(0.1, 0.2)), 0.7},
                                  MonomialTerm{0.05, cd(0.3, 1.0), {2, 0}, {0, 1}}};
  KahlerChart ch = fubini_study(2).perturbed(0.5, perts);
  for (int trial = 0; trial < 10; ++trial) {
    CVec z = random_point(rng, 2, 0.8);
    CMat h = metric_at(ch, z).h;
    EXPECT_LT((h - fd_levi(ch, z, 1e-4)).norm() / h.norm(), 1e-6);
    auto md = metric_derivs(ch, z);
    for (int a = 0; a < 4; ++a)
      EXPECT_LT((md.dh[a] - fd_metric(ch, z, a, 1e-3)).norm(), 1e-6 * (1 + md.dh[a].norm()));
  }
}

TEST(Kahler, Christoffel) {
  CVec z(1);
  z[0] = cd(0.4, 0.7);
  EXPECT_LT(christoffel_at(flat_chart(1), z)[0].norm(), 1e-15);
  auto G = christoffel_at(fubini_study(1, 2.0), z);
  cd expect = -2.0 * std::conj(z[0]) / (1.0 + std::norm(z[0]));
  EXPECT_LT(std::abs(G[0](0, 0) - expect), 1e-13);
  // symmetry and metric compatibility on C^2 with a perturbation
  std::mt19937 rng(9);
  KahlerChart ch = complex_ball(2).perturbed(1.0, {MonomialTerm{0.1, 1.0, {1, 1}, {1, 0}}});
  for (int trial = 0; trial < 10; ++trial) {
    CVec p = random_point(rng, 2, 0.6);
    auto md = metric_derivs(ch, p);
    auto Gm = christoffel_from(md);
    for (auto& Gk : Gm) EXPECT_LT((Gk - Gk.transpose()).norm(), 1e-12);
    // d_i h(j, l) = sum_k Gamma^k_ij h(k, l)
    for (int i = 0; i < 2; ++i) {
      CMat lhs = md.dz(i);
      CMat rhs(2, 2);
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) rhs(j, l) = Gm[0](i, j) * md.h(0, l) + Gm[1](i, j) * md.h(1, l);
      EXPECT_LT((lhs - rhs).norm(), 1e-12);
    }
  }
}

TEST(Kahler, EinsteinConstants) {
  std::mt19937 rng(2);
  for (int n = 1; n <= 3; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      CVec z = random_point(rng, n, 0.9);
      EXPECT_LT(einstein_defect(fubini_study(n), z), 1e-8);
      EXPECT_LT(einstein_defect(complex_ball(n), z), 1e-8);
      EXPECT_LT(einstein_defect(fubini_study(n, 0.7), z), 1e-8);
      EXPECT_LT(einstein_defect(flat_chart(n), z), 1e-12);
    }
  }
  CVec z = CVec::Constant(2, cd(0.2, 0.1));
  auto ric = ricci_form_at(fubini_study(2), z);
  RMat omega = hermitian_to_two_form(metric_at(fubini_study(2), z).h);
  EXPECT_LT((ric.form - 3.0 * omega).norm(), 1e-10);
  KahlerChart pert = fubini_study(2).perturbed(1.0, {GaussianBump{0.2, z, 0.5}});
  EXPECT_FALSE(pert.einstein_constant().has_value());
  EXPECT_THROW(einstein_defect(pert, z), Error);
  KahlerChart withl = KahlerChart(2, FubiniStudyPotential{1.0}, "fs", 3.0).perturbed(1.0, {GaussianBump{0.2, z, 0.5}});
  (void)withl;
}

TEST(Kahler, RicciSymmetries) {
  std::mt19937 rng(4);
  KahlerChart ch = fubini_study(2).perturbed(1.0, {GaussianBump{0.3, CVec::Zero(2), 0.8}});
  RMat J = complex_structure(2);
  for (int trial = 0; trial < 10; ++trial) {
    CVec z = random_point(rng, 2, 0.7);
    auto r = ricci_form_at(ch, z);
    EXPECT_LT((r.tensor - r.tensor.transpose()).norm(), 1e-8);
    EXPECT_LT((J.transpose() * r.tensor * J - r.tensor).norm(), 1e-8);
    // Ric(X, Y) = -rho(JX, Y)
    EXPECT_LT((r.tensor + J.transpose() * r.form).norm(), 1e-8);
  }
}

TEST(Kahler, RicciClosedByFiniteDifferences) {
  KahlerChart ch = fubini_study(2).perturbed(1.0, {MonomialTerm{0.2, cd(1, 1), {1, 2}, {0, 1}}});
  CVec z(2);
  z << cd(0.3, -0.1), cd(-0.2, 0.25);
  auto comp = [&](CVec w, int a, int b) { return ricci_form_at(ch, w).form(a, b); };
  // real variable a in (Re z1, Re z2, Im z1, Im z2) layout of the 2-form
  auto shifted = [&](int a, double s) {
    CVec w = z;
    if (a < 2)
      w[a] += s;
    else
      w[a - 2] += cd(0, s);
    return w;
  };
  for (double step : {1e-2, 5e-3}) {
    double worst = 0;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        for (int c = b + 1; c < 4; ++c) {
          auto d = [&](int v, int i, int j) {
            return (comp(shifted(v, step), i, j) - comp(shifted(v, -step), i, j)) / (2 * step);
          };
          worst = std::max(worst, std::abs(d(a, b, c) - d(b, a, c) + d(c, a, b)));
        }
    EXPECT_LT(worst, 50 * step * step);
  }
}

TEST(Kahler, GaussCurvature) {
  for (double c : {0.5, 1.0, 3.0}) {
    CVec z = CVec::Constant(1, cd(0.3, 0.8));
    EXPECT_NEAR(gauss_curvature(upper_half_plane(c), z), -2.0 / c, 1e-10);
    EXPECT_NEAR(gauss_curvature(complex_ball(1, c), CVec::Constant(1, cd(0.3, 0.2))), -2.0 / c, 1e-10);
    EXPECT_NEAR(gauss_curvature(fubini_study(1, c), z), 2.0 / c, 1e-10);
    // finite-difference oracle: K = -(1/(2 h)) Laplacian(log h)
    auto logh = [&](double x, double y) {
      return std::log(metric_at(upper_half_plane(c), CVec::Constant(1, cd(x, y))).h(0, 0).real());
    };
    double x = 0.3, y = 0.8;
    auto lap_at = [&](double s) {
      return (logh(x + s, y) + logh(x - s, y) + logh(x, y + s) + logh(x, y - s) - 4 * logh(x, y)) / (s * s);
    };
    double lap = (4 * lap_at(1e-3) - lap_at(2e-3)) / 3;  // Richardson
    double h = metric_at(upper_half_plane(c), z).h(0, 0).real();
    EXPECT_NEAR(-lap / (2 * h), -2.0 / c, 1e-6);
  }
}

TEST(Kahler, DeckTransforms) {
  double ell = 0.8;
  KahlerChart ch = hyperbolic_cylinder(ell);
  auto r = deck_apply(ch, 0, CVec::Constant(1, cd(0, 1)));
  EXPECT_LT(std::abs(r.point[0] - cd(0, std::exp(ell))), 1e-14);
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> U(0.1, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    CVec z = CVec::Constant(1, cd(U(rng) - 1.0, U(rng)));
    auto g = deck_apply(ch, 0, z);
    CMat pulled = g.derivative.transpose() * metric_at(ch, g.point).h * g.derivative.conjugate();
    EXPECT_LT((pulled - metric_at(ch, z).h).norm(), 1e-10);
    CVec back = ch.decks()[0].inverse().apply(g.point);
    EXPECT_LT((back - z).norm(), 1e-12);
  }
  EXPECT_THROW(deck_apply(ch, 1, CVec::Constant(1, cd(0, 1))), Error);
  // conformal cylinder perturbation is deck invariant too
  KahlerChart pc = ch.perturbed(1.0, {}, {CylinderConformal{0.1, ell}});
  for (int trial = 0; trial < 10; ++trial) {
    CVec z = CVec::Constant(1, cd(U(rng) - 1.0, U(rng)));
    auto g = deck_apply(pc, 0, z);
    CMat pulled = g.derivative.transpose() * metric_at(pc, g.point).h * g.derivative.conjugate();
    EXPECT_LT((pulled - metric_at(pc, z).h).norm(), 1e-10);
  }
}

TEST(Kahler, AmbientExp) {
  CVec p(2), v(2);
  p << cd(0.1, 0.2), cd(-0.3, 1.0);
  v << cd(2.0, -1.0), cd(0.5, 0.5);
  EXPECT_LT((ambient_exp(flat_chart(2), p, v, 4) - (p + v)).norm(), 1e-12);
  for (double s : {0.5, 1.0, -0.7}) {
    CVec q = ambient_exp(upper_half_plane(), CVec::Constant(1, cd(0, 1)), CVec::Constant(1, cd(0, s)), 64);
    EXPECT_LT(std::abs(q[0] - cd(0, std::exp(s))), 1e-8);
  }
  // speed conservation along an oblique geodesic in the ball
  KahlerChart ch = complex_ball(2);
  CVec z = p * 0.5, w = v * 0.3;
  auto speed = [&](const CVec& zz, const CVec& ww) { return metric_at(ch, zz).metric(ww, ww); };
  double s0 = speed(z, w);
  const int steps = 200;
  for (int k = 0; k < 5; ++k) {
    CVec z1 = ambient_exp(ch, z, w, steps);
    // velocity at the end by a short central difference in time
    double e = 1e-4;
    CVec za = ambient_exp(ch, z, w * (1 + e), steps), zb = ambient_exp(ch, z, w * (1 - e), steps);
    CVec w1 = (za - zb) / (2 * e);
    EXPECT_NEAR(speed(z1, w1), s0, 1e-7 * s0);
    z = z1;
    w = w1;
  }
  EXPECT_THROW(ambient_exp(ch, CVec::Constant(2, 0.6), CVec::Constant(2, 5.0)), Error);
}
