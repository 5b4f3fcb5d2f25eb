#include <gtest/gtest.h>

#include <trgeom/jet.hpp>

using trgeom::Jet;

TEST(Jet, TableSizes) {
  EXPECT_EQ((trgeom::MonomialTable<2, 4>::kSize), 15);
  EXPECT_EQ((trgeom::MonomialTable<4, 6>::kSize), 210);
}

TEST(Jet, PolynomialPartials) {
  using J = Jet<double, 2, 4>;
  J x = J::variable(0, 0.3), y = J::variable(1, -0.7);
  J f = x * x * y + 3.0 * y * y * y * y;
  EXPECT_NEAR(f.value(), 0.09 * -0.7 + 3 * 0.2401, 1e-14);
  EXPECT_NEAR(f.partial({1, 0}), 2 * 0.3 * -0.7, 1e-14);
  EXPECT_NEAR(f.partial({2, 1}), 2.0, 1e-14);
  EXPECT_NEAR(f.partial({0, 4}), 72.0, 1e-12);
  EXPECT_NEAR(f.partial({0, 3}), 72.0 * -0.7, 1e-12);
}

TEST(Jet, ElementaryAgainstFiniteDifferences) {
  using J = Jet<double, 2, 3>;
  auto fn = [](auto x, auto y) { return log(1.0 + x * x + y * y) * exp(sin(x) * cos(y)) / sqrt(2.0 + x); };
  auto fd = [](double x, double y) {
    using std::cos, std::exp, std::log, std::sin, std::sqrt;
    return log(1.0 + x * x + y * y) * exp(sin(x) * cos(y)) / sqrt(2.0 + x);
  };
  double x0 = 0.4, y0 = -0.2, h = 1e-4;
  J f = fn(J::variable(0, x0), J::variable(1, y0));
  EXPECT_NEAR(f.value(), fd(x0, y0), 1e-14);
  EXPECT_NEAR(f.partial({1, 0}), (fd(x0 + h, y0) - fd(x0 - h, y0)) / (2 * h), 1e-7);
  double fxy = (fd(x0 + h, y0 + h) - fd(x0 + h, y0 - h) - fd(x0 - h, y0 + h) + fd(x0 - h, y0 - h)) / (4 * h * h);
  EXPECT_NEAR(f.partial({1, 1}), fxy, 1e-6);
  J fx = f.derivative(0);
  EXPECT_NEAR(fx.partial({0, 1}), f.partial({1, 1}), 1e-13);
}

TEST(Jet, ComplexReciprocalAndPow) {
  using C = std::complex<double>;
  using J = Jet<C, 1, 5>;
  C z0(0.3, 0.8);
  J z = J::variable(0, z0);
  J r = 1.0 / (1.0 - z);
  // d^k/dz^k (1-z)^{-1} = k!/(1-z)^{k+1}
  double fact = 1;
  for (int k = 0; k <= 5; ++k) {
    if (k) fact *= k;
    C expect = fact / std::pow(C(1) - z0, k + 1);
    EXPECT_LT(std::abs(r.partial({k}) - expect), 1e-11);
  }
  J s = pow(z, 2.0);
  EXPECT_LT(std::abs(s.partial({1}) - 2.0 * z0), 1e-13);
  EXPECT_LT(std::abs(s.partial({3})), 1e-12);
}
