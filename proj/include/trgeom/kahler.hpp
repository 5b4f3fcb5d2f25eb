#pragma once

// Kahler manifolds presented as a single holomorphic chart with a potential.
//
// Convention record (shared by every module):
//   h = 2 * (d dbar K)   i.e. h_{ij} = 2 dK/dz_i dzbar_j, so K = |z|^2/2 gives h = Id
//   h(u, v) = u^T h conj(v),  g = Re h,  omega = -Im h
//   Ricci Hermitian matrix hR = -2 d dbar log det h,  rho = -Im hR,  Ric = Re hR
// Derivatives of h are obtained by evaluating the closed-form potential on jets.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "jet.hpp"
#include "trlinalg.hpp"

namespace trgeom {

/// Machine-readable form of the convention record above; run reports carry its hash.
inline constexpr std::string_view kConventionRecord =
    "h=2*ddbar(K);h(u,v)=u^T*h*conj(v);g=Re(h);omega=-Im(h);hR=-2*ddbar(log det h);rho=-Im(hR);"
    "Ric=Re(hR);real layout=(Re,Im);xi(circle in C)=-2pi;moser: form(X,.)=-alpha_dot";

// ---- potentials -----------------------------------------------------------

struct FlatPotential {};
struct FubiniStudyPotential {
  double c = 1.0;
};
struct BallPotential {
  double c = 1.0;
};
struct HalfPlanePotential {
  double c = 1.0;
};
using BasePotential = std::variant<FlatPotential, FubiniStudyPotential, BallPotential, HalfPlanePotential>;

/// amp * exp(-|z - center|^2 / width^2)
struct GaussianBump {
  double amp = 0.0;
  CVec center;
  double width = 1.0;
};
/// amp * Re(coeff * z^p * conj(z)^q)
struct MonomialTerm {
  double amp = 0.0;
  cd coeff = 1.0;
  std::vector<int> p, q;
};
using Perturbation = std::variant<GaussianBump, MonomialTerm>;

/// n = 1 conformal factor exp(2u); u = eps * (x/|z|) * (1 + cos(2 pi log|z| / ell) / 2).
/// Invariant under z -> e^ell z.
struct CylinderConformal {
  double eps = 0.0;
  double ell = 1.0;
};
/// u = eps * exp(-|z - center|^2 / width^2)
struct GaussianConformal {
  double eps = 0.0;
  cd center = 0.0;
  double width = 1.0;
};
using Conformal = std::variant<CylinderConformal, GaussianConformal>;

// ---- deck transformations -------------------------------------------------

struct DeckTransform {
  enum class Kind { Mobius, Translation } kind = Kind::Translation;
  cd a = 1.0, b = 0.0, c = 0.0, d = 1.0;  // Mobius (n = 1)
  CVec shift;                             // Translation

  static DeckTransform mobius(cd a, cd b, cd c, cd d) {
    DeckTransform g;
    g.kind = Kind::Mobius;
    g.a = a, g.b = b, g.c = c, g.d = d;
    return g;
  }
  static DeckTransform translation(const CVec& s) {
    DeckTransform g;
    g.shift = s;
    return g;
  }

  CVec apply(const CVec& z) const {
    if (kind == Kind::Translation) return z + shift;
    CVec w(1);
    w[0] = (a * z[0] + b) / (c * z[0] + d);
    return w;
  }
  /// Complex Jacobian (holomorphic).
  CMat derivative(const CVec& z) const {
    if (kind == Kind::Translation) return CMat::Identity(z.size(), z.size());
    CMat D(1, 1);
    cd den = c * z[0] + d;
    D(0, 0) = (a * d - b * c) / (den * den);
    return D;
  }
  DeckTransform inverse() const {
    if (kind == Kind::Translation) return translation(-shift);
    return mobius(d, -b, -c, a);
  }
};

// ---- chart ----------------------------------------------------------------

struct MetricDerivs {
  CMat h;
  std::vector<CMat> dh;  // d h / d x_a for real variables x_a ordered (x1, y1, x2, y2, ...)

  /// Holomorphic Wirtinger derivative d h / d z_i.
  CMat dz(int i) const { return 0.5 * (dh[2 * i] - cd(0, 1) * dh[2 * i + 1]); }
};

struct RicciData {
  CMat hR;      // Ricci Hermitian matrix
  RMat form;    // rho as a real antisymmetric 2n x 2n matrix on (Re, Im) coordinates
  RMat tensor;  // Ric as a real symmetric 2n x 2n matrix
};

/// Value, gradient and Hessian of a real function of the 2n real variables.
struct ScalarDerivs {
  double value = 0.0;
  RVec grad;
  RMat hess;
};

/// Real 2n x 2n matrix of the 2-form (u, v) -> -Im(u^T M conj v), M Hermitian.
inline RMat hermitian_to_two_form(const CMat& M) {
  const auto n = M.rows();
  RMat F(2 * n, 2 * n);
  RMat Mr = M.real(), Mi = M.imag();
  F << -Mi, Mr, -Mr, -Mi;
  return F;
}

/// Real 2n x 2n matrix of the symmetric form (u, v) -> Re(u^T M conj v).
inline RMat hermitian_to_symmetric(const CMat& M) {
  const auto n = M.rows();
  RMat F(2 * n, 2 * n);
  RMat Mr = M.real(), Mi = M.imag();
  F << Mr, Mi, -Mi, Mr;
  return F;
}

class KahlerChart {
 public:
  KahlerChart() = default;
  KahlerChart(int n, BasePotential base, std::string name, std::optional<double> lambda)
      : n_(n), base_(std::move(base)), name_(std::move(name)), lambda_(lambda) {}

  int n() const { return n_; }
  const std::string& name() const { return name_; }
  const BasePotential& base() const { return base_; }
  std::optional<double> einstein_constant() const { return lambda_; }
  const std::vector<DeckTransform>& decks() const { return decks_; }
  const std::vector<Perturbation>& perturbations() const { return perturb_; }
  const std::vector<Conformal>& conformal() const { return conformal_; }
  double t() const { return t_; }

  KahlerChart& add_deck(DeckTransform g) {
    decks_.push_back(std::move(g));
    return *this;
  }

  /// Base chart with potential K + t * sum(phi) and, for n = 1, metric scaled by exp(2 t u).
  KahlerChart perturbed(double t, std::vector<Perturbation> perts, std::vector<Conformal> confs = {}) const {
    if (!confs.empty() && n_ != 1) fail(ErrorKind::DimensionMismatch, "conformal perturbations need n = 1");
    KahlerChart out = *this;
    out.t_ = t;
    out.perturb_ = std::move(perts);
    out.conformal_ = std::move(confs);
    if (t != 0.0 && (!out.perturb_.empty() || !out.conformal_.empty())) out.lambda_.reset();
    out.name_ = name_ + "+perturbation";
    return out;
  }

  /// Same perturbation data, different amplitude parameter.
  KahlerChart at_t(double t) const {
    KahlerChart out = *this;
    out.t_ = t;
    return out;
  }

  bool in_domain(const CVec& z) const {
    if (z.size() != n_) return false;
    if (!z.allFinite()) return false;
    return std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, BallPotential>) return z.squaredNorm() < 1.0;
          if constexpr (std::is_same_v<P, HalfPlanePotential>) return z[0].imag() > 0.0;
          return true;
        },
        base_);
  }

  void require_domain(const CVec& z) const {
    if (z.size() != n_) fail(ErrorKind::DimensionMismatch, "point has dimension " + std::to_string(z.size()));
    if (!in_domain(z)) fail(ErrorKind::OutOfDomain, name_ + ": point outside chart domain");
  }

  /// Potential on the real variables x = (x1, y1, ..., xn, yn); S is double or a real jet.
  template <class S>
  S potential(const S* x) const {
    using std::exp;
    using std::log;
    S r2 = S(0.0);
    for (int k = 0; k < n_; ++k) r2 = r2 + x[2 * k] * x[2 * k] + x[2 * k + 1] * x[2 * k + 1];
    S K = std::visit(
        [&](const auto& p) -> S {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, FlatPotential>) return 0.5 * r2;
          if constexpr (std::is_same_v<P, FubiniStudyPotential>) return p.c * log(1.0 + r2);
          if constexpr (std::is_same_v<P, BallPotential>) return -p.c * log(1.0 - r2);
          if constexpr (std::is_same_v<P, HalfPlanePotential>) return -p.c * log(x[1]);
        },
        base_);
    if (t_ != 0.0)
      for (const auto& pert : perturb_) K = K + t_ * perturbation_value(pert, x);
    return K;
  }

  template <class S>
  S perturbation_value(const Perturbation& pert, const S* x) const {
    using std::exp;
    return std::visit(
        [&](const auto& p) -> S {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, GaussianBump>) {
            S d2 = S(0.0);
            for (int k = 0; k < n_; ++k) {
              S dx = x[2 * k] - p.center[k].real(), dy = x[2 * k + 1] - p.center[k].imag();
              d2 = d2 + dx * dx + dy * dy;
            }
            return p.amp * exp(-d2 / (p.width * p.width));
          } else {
            using C = complex_of_t<S>;
            C prod = to_complex(S(1.0));
            for (int k = 0; k < n_; ++k) {
              C z = make_complex(x[2 * k], x[2 * k + 1]);
              C zb = make_complex(x[2 * k], -x[2 * k + 1]);
              int pk = k < static_cast<int>(p.p.size()) ? p.p[k] : 0;
              int qk = k < static_cast<int>(p.q.size()) ? p.q[k] : 0;
              for (int e = 0; e < pk; ++e) prod = prod * z;
              for (int e = 0; e < qk; ++e) prod = prod * zb;
            }
            return p.amp * real_part(prod * p.coeff);
          }
        },
        pert);
  }

  /// Sum of the potential perturbations (the rate dK/dt of the family).
  template <class S>
  S perturbation_sum(const S* x) const {
    S out = S(0.0);
    for (const auto& pert : perturb_) out = out + perturbation_value(pert, x);
    return out;
  }

  /// Conformal exponent per unit t (n = 1); the metric is exp(2 t u) times the potential metric.
  template <class S>
  S conformal_rate(const S* x) const {
    using std::cos;
    using std::exp;
    using std::log;
    using std::sqrt;
    S u = S(0.0);
    for (const auto& conf : conformal_) {
      u = u + std::visit(
                  [&](const auto& c) -> S {
                    using P = std::decay_t<decltype(c)>;
                    if constexpr (std::is_same_v<P, CylinderConformal>) {
                      S r2 = x[0] * x[0] + x[1] * x[1];
                      S r = sqrt(r2);
                      return c.eps * (x[0] / r) * (1.0 + 0.5 * cos((M_PI / c.ell) * log(r2)));
                    } else {
                      S dx = x[0] - c.center.real(), dy = x[1] - c.center.imag();
                      return c.eps * exp(-(dx * dx + dy * dy) / (c.width * c.width));
                    }
                  },
                  conf);
    }
    return u;
  }

  bool has_conformal() const { return t_ != 0.0 && !conformal_.empty(); }

 private:
  int n_ = 1;
  BasePotential base_ = FlatPotential{};
  std::string name_ = "flat";
  std::optional<double> lambda_ = 0.0;
  std::vector<DeckTransform> decks_;
  std::vector<Perturbation> perturb_;
  std::vector<Conformal> conformal_;
  double t_ = 0.0;
};

// ---- built-in charts ------------------------------------------------------

inline KahlerChart flat_chart(int n) { return KahlerChart(n, FlatPotential{}, "flat", 0.0); }
inline KahlerChart fubini_study(int n, double c = 1.0) {
  return KahlerChart(n, FubiniStudyPotential{c}, "fubini_study", (n + 1) / c);
}
inline KahlerChart complex_ball(int n, double c = 1.0) {
  return KahlerChart(n, BallPotential{c}, "complex_ball", -(n + 1) / c);
}
inline KahlerChart upper_half_plane(double c = 1.0) {
  return KahlerChart(1, HalfPlanePotential{c}, "upper_half_plane", -2.0 / c);
}
/// Upper half-plane with the deck transformation z -> e^ell z (hyperbolic cylinder).
inline KahlerChart hyperbolic_cylinder(double ell, double c = 1.0) {
  KahlerChart ch = upper_half_plane(c);
  ch.add_deck(DeckTransform::mobius(std::exp(ell), 0.0, 0.0, 1.0));
  return ch;
}

// ---- jet evaluation -------------------------------------------------------

namespace detail {

template <int N, int D>
using RJet = Jet<double, N, D>;
template <int N, int D>
using CJet = Jet<cd, N, D>;

template <int D2, class T, int N, int D1>
Jet<T, N, D2> truncate(const Jet<T, N, D1>& j) {
  static_assert(D2 <= D1);
  Jet<T, N, D2> out;
  for (int i = 0; i < Jet<T, N, D2>::kSize; ++i) out[i] = j[i];
  return out;
}

template <int N, int D>
std::array<RJet<N, D>, N> seed(const CVec& z) {
  std::array<RJet<N, D>, N> x;
  for (int k = 0; k < N / 2; ++k) {
    x[2 * k] = RJet<N, D>::variable(2 * k, z[k].real());
    x[2 * k + 1] = RJet<N, D>::variable(2 * k + 1, z[k].imag());
  }
  return x;
}

/// h = 2 d dbar of a real jet F (coefficients valid up to degree D).
template <int D, int N, int DF>
std::vector<CJet<N, D>> levi_form(const RJet<N, DF>& F) {
  constexpr int n = N / 2;
  std::array<RJet<N, DF>, N> d1;
  for (int a = 0; a < N; ++a) d1[a] = F.derivative(a);
  std::vector<CJet<N, D>> h(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      RJet<N, D> re = truncate<D>(d1[2 * i].derivative(2 * j) + d1[2 * i + 1].derivative(2 * j + 1));
      RJet<N, D> im = truncate<D>(d1[2 * i].derivative(2 * j + 1) - d1[2 * i + 1].derivative(2 * j));
      h[i * n + j] = make_complex(re, im) * cd(0.5);
    }
  return h;
}

template <int N, int D>
std::vector<CJet<N, D>> metric_jet(const KahlerChart& chart, const CVec& z) {
  auto x = seed<N, D + 2>(z);
  RJet<N, D + 2> K = chart.potential(x.data());
  auto h = levi_form<D>(K);
  if (chart.has_conformal()) {
    auto xs = seed<N, D>(z);
    RJet<N, D> u = chart.conformal_rate(xs.data()) * chart.t();
    CJet<N, D> f = to_complex(exp(2.0 * u));
    for (auto& e : h) e = e * f;
  }
  return h;
}

template <class T>
T small_det(const std::vector<T>& m, int n) {
  if (n == 1) return m[0];
  if (n == 2) return m[0] * m[3] - m[1] * m[2];
  if (n == 3)
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  fail(ErrorKind::DerivativeOrderUnavailable, "jet determinant implemented for n <= 3");
}

template <int N, int D>
CMat value_matrix(const std::vector<CJet<N, D>>& m) {
  constexpr int n = N / 2;
  CMat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = m[i * n + j].value();
  return out;
}

template <int N, int D>
CMat partial_matrix(const std::vector<CJet<N, D>>& m, int var) {
  constexpr int n = N / 2;
  typename MonomialTable<N, D>::Exponent e{};
  e[var] = 1;
  CMat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = m[i * n + j].partial(e);
  return out;
}

/// Ricci Hermitian matrix jet, valid up to degree D.
template <int N, int D>
std::vector<CJet<N, D>> ricci_jet(const KahlerChart& chart, const CVec& z) {
  auto h = metric_jet<N, D + 2>(chart, z);
  RJet<N, D + 2> L = real_part(log(small_det(h, N / 2)));
  auto r = levi_form<D>(L);
  for (auto& e : r) e = e * cd(-1.0);
  return r;
}

template <class F>
decltype(auto) dispatch_n(int n, F&& f) {
  switch (n) {
    case 1: return f(std::integral_constant<int, 2>{});
    case 2: return f(std::integral_constant<int, 4>{});
    case 3: return f(std::integral_constant<int, 6>{});
    default: fail(ErrorKind::DerivativeOrderUnavailable, "charts support complex dimension 1..3");
  }
}

}  // namespace detail

// ---- pointwise geometry ---------------------------------------------------

inline void require_positive(const KahlerChart& chart, const CMat& h) {
  Eigen::LLT<CMat> llt(h);
  if (llt.info() != Eigen::Success || !h.allFinite())
    fail(ErrorKind::OutOfDomain, chart.name() + ": metric not positive definite");
}

inline HermitianStructure metric_at(const KahlerChart& chart, const CVec& z) {
  chart.require_domain(z);
  CMat h = detail::dispatch_n(chart.n(), [&](auto N) { return detail::value_matrix(detail::metric_jet<N(), 0>(chart, z)); });
  require_positive(chart, h);
  return {h};
}

inline MetricDerivs metric_derivs(const KahlerChart& chart, const CVec& z) {
  chart.require_domain(z);
  return detail::dispatch_n(chart.n(), [&](auto N) {
    auto m = detail::metric_jet<N(), 1>(chart, z);
    MetricDerivs out;
    out.h = detail::value_matrix(m);
    for (int a = 0; a < N(); ++a) out.dh.push_back(detail::partial_matrix(m, a));
    return out;
  });
}

/// Gamma[k](i, j) = sum_l (h^T)^{-1}(k, l) d_i h(j, l).
inline std::vector<CMat> christoffel_from(const MetricDerivs& md) {
  const auto n = md.h.rows();
  CMat Ginv = md.h.transpose().inverse();
  std::vector<CMat> G(n, CMat::Zero(n, n));
  for (int i = 0; i < n; ++i) {
    CMat di = md.dz(i);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) G[k](i, j) = Ginv.row(k).cwiseProduct(di.row(j)).sum();
  }
  return G;
}

inline std::vector<CMat> christoffel_at(const KahlerChart& chart, const CVec& z) {
  return christoffel_from(metric_derivs(chart, z));
}

/// sum_{ij} Gamma^k_{ij} u^i v^j
inline CVec christoffel_contract(const std::vector<CMat>& G, const CVec& u, const CVec& v) {
  CVec out(G.size());
  for (size_t k = 0; k < G.size(); ++k) out[k] = u.transpose() * G[k] * v;
  return out;
}

/// Holomorphic gradient d/dz_k log det h.
inline CVec log_det_gradient(const MetricDerivs& md) {
  const auto n = md.h.rows();
  CMat hinv = md.h.inverse();
  CVec out(n);
  for (int k = 0; k < n; ++k) out[k] = (hinv * md.dz(k)).trace();
  return out;
}

inline RicciData ricci_form_at(const KahlerChart& chart, const CVec& z) {
  chart.require_domain(z);
  CMat hR = detail::dispatch_n(chart.n(), [&](auto N) { return detail::value_matrix(detail::ricci_jet<N(), 0>(chart, z)); });
  return {hR, hermitian_to_two_form(hR), hermitian_to_symmetric(hR)};
}

/// Ricci matrix and its first derivatives along the real variables.
inline MetricDerivs ricci_derivs(const KahlerChart& chart, const CVec& z) {
  chart.require_domain(z);
  return detail::dispatch_n(chart.n(), [&](auto N) {
    auto m = detail::ricci_jet<N(), 1>(chart, z);
    MetricDerivs out;
    out.h = detail::value_matrix(m);
    for (int a = 0; a < N(); ++a) out.dh.push_back(detail::partial_matrix(m, a));
    return out;
  });
}

inline double einstein_defect(const KahlerChart& chart, const CVec& z) {
  auto lambda = chart.einstein_constant();
  if (!lambda) fail(ErrorKind::NoEinsteinConstant, chart.name() + " declares no Einstein constant");
  RMat omega = hermitian_to_two_form(metric_at(chart, z).h);
  RMat rho = ricci_form_at(chart, z).form;
  Eigen::JacobiSVD<RMat> svd(rho - *lambda * omega);
  return svd.singularValues()[0];
}

/// Gauss curvature of an n = 1 chart (Ric = K g).
inline double gauss_curvature(const KahlerChart& chart, const CVec& z) {
  if (chart.n() != 1) fail(ErrorKind::DimensionMismatch, "Gauss curvature needs n = 1");
  return ricci_form_at(chart, z).hR(0, 0).real() / metric_at(chart, z).h(0, 0).real();
}

/// Derivatives up to order 2 of a real function of the chart's real variables.
template <class F>
ScalarDerivs scalar_derivs(int n, const CVec& z, F&& f) {
  return detail::dispatch_n(n, [&](auto N) {
    auto x = detail::seed<N(), 2>(z);
    auto v = f(x.data());
    ScalarDerivs out;
    out.value = v.value();
    out.grad.resize(N());
    out.hess.resize(N(), N());
    for (int a = 0; a < N(); ++a) {
      typename MonomialTable<N(), 2>::Exponent e{};
      e[a] = 1;
      out.grad[a] = v.partial(e);
      for (int b = 0; b < N(); ++b) {
        typename MonomialTable<N(), 2>::Exponent e2{};
        e2[a] += 1;
        e2[b] += 1;
        out.hess(a, b) = v.partial(e2);
      }
    }
    return out;
  });
}

struct DeckResult {
  CVec point;
  CMat derivative;
};

inline DeckResult deck_apply(const KahlerChart& chart, int k, const CVec& z) {
  if (k < 0 || k >= static_cast<int>(chart.decks().size()))
    fail(ErrorKind::OutOfDomain, "deck transformation index " + std::to_string(k) + " not declared");
  chart.require_domain(z);
  const auto& g = chart.decks()[k];
  DeckResult r{g.apply(z), g.derivative(z)};
  chart.require_domain(r.point);
  return r;
}

/// Geodesic exponential by fixed-step RK4 over unit time.
inline CVec ambient_exp(const KahlerChart& chart, const CVec& p, const CVec& v, int steps = 32) {
  chart.require_domain(p);
  const auto n = p.size();
  auto accel = [&](const CVec& z, const CVec& w) -> CVec {
    if (!chart.in_domain(z)) fail(ErrorKind::LeftDomain, chart.name() + ": geodesic left the chart domain");
    return -christoffel_contract(christoffel_at(chart, z), w, w);
  };
  CVec z = p, w = v;
  const double dt = 1.0 / steps;
  for (int s = 0; s < steps; ++s) {
    CVec k1z = w, k1w = accel(z, w);
    CVec k2z = w + 0.5 * dt * k1w, k2w = accel(z + 0.5 * dt * k1z, k2z);
    CVec k3z = w + 0.5 * dt * k2w, k3w = accel(z + 0.5 * dt * k2z, k3z);
    CVec k4z = w + dt * k3w, k4w = accel(z + dt * k3z, k4z);
    z += dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
    w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
  }
  if (!chart.in_domain(z) || z.size() != n) fail(ErrorKind::LeftDomain, chart.name() + ": geodesic left the chart domain");
  return z;
}

}  // namespace trgeom
