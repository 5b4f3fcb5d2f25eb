#pragma once

// Moser transport of an immersion along a cohomologous family of Kahler or Ricci forms.

#include "maslov.hpp"
#include "parallel.hpp"

namespace trgeom {

enum class FormMode { KahlerForm, RicciForm };

inline constexpr double kLagrangianTol = 1e-8;

/// The path t -> base chart with potential K + t phi (and conformal factor exp(2 t u) for n = 1).
/// alpha_dot is Im(d_z P') where P is the potential of the chosen form: K for omega,
/// -log det h for rho, so that d alpha_dot = d/dt form_t holds exactly.
class FormFamily {
 public:
  FormFamily() = default;
  FormFamily(KahlerChart base, std::vector<Perturbation> perts, std::vector<Conformal> confs, FormMode mode)
      : base_(std::move(base)), perts_(std::move(perts)), confs_(std::move(confs)), mode_(mode) {
    if (mode_ == FormMode::KahlerForm && !confs_.empty())
      fail(ErrorKind::DimensionMismatch, "conformal paths are only supported in ricci-form mode");
  }

  const KahlerChart& base() const { return base_; }
  FormMode mode() const { return mode_; }
  int n() const { return base_.n(); }
  bool trivial() const { return perts_.empty() && confs_.empty(); }

  KahlerChart chart(double t) const { return trivial() ? base_ : base_.perturbed(t, perts_, confs_); }

  /// Real 2n x 2n matrix of form_t at z (layout Re, Im).
  RMat form(const KahlerChart& chart_t, const CVec& z) const {
    if (mode_ == FormMode::KahlerForm) return hermitian_to_two_form(metric_at(chart_t, z).h);
    return ricci_form_at(chart_t, z).form;
  }
  RMat form(double t, const CVec& z) const { return form(chart(t), z); }

  /// alpha_dot at z in real components (layout Re, Im).
  RVec alpha_dot(const KahlerChart& chart_t, const CVec& z) const {
    const int n = this->n();
    RVec a = RVec::Zero(2 * n);
    if (trivial()) return a;
    RVec grad = rate_gradient(chart_t, z);  // interleaved (x1, y1, ...)
    for (int k = 0; k < n; ++k) {
      a[k] = -0.5 * grad[2 * k + 1];
      a[n + k] = 0.5 * grad[2 * k];
    }
    return a;
  }
  RVec alpha_dot(double t, const CVec& z) const { return alpha_dot(chart(t), z); }

 private:
  /// Real gradient of dP/dt.
  RVec rate_gradient(const KahlerChart& chart_t, const CVec& z) const {
    return detail::dispatch_n(n(), [&](auto NC) -> RVec {
      constexpr int N = NC();
      using detail::RJet;
      using detail::CJet;
      RJet<N, 1> rate;
      if (mode_ == FormMode::KahlerForm) {
        auto x = detail::seed<N, 1>(z);
        rate = chart_t.perturbation_sum(x.data());
      } else {
        // -d/dt log det((h_K + t h_phi) exp(2 t u)) = -tr(h_t^{-1} h_phi) - 2 n u
        KahlerChart pot = base_.perturbed(chart_t.t(), perts_, {});
        auto h = detail::metric_jet<N, 1>(pot, z);
        auto x3 = detail::seed<N, 3>(z);
        RJet<N, 3> phi = chart_t.perturbation_sum(x3.data());
        auto hphi = detail::levi_form<1>(phi);
        constexpr int n = N / 2;
        CJet<N, 1> dd;
        for (int k = 0; k < n; ++k) {
          auto m = h;
          for (int i = 0; i < n; ++i) m[i * n + k] = hphi[i * n + k];
          dd += detail::small_det(m, n);
        }
        rate = -real_part(dd / detail::small_det(h, n));
        if (!confs_.empty()) {
          auto x1 = detail::seed<N, 1>(z);
          rate = rate - 2.0 * n * chart_t.conformal_rate(x1.data());
        }
      }
      RVec g(N);
      for (int v = 0; v < N; ++v) {
        typename MonomialTable<N, 1>::Exponent e{};
        e[v] = 1;
        g[v] = rate.partial(e);
      }
      return g;
    });
  }

  KahlerChart base_;
  std::vector<Perturbation> perts_;
  std::vector<Conformal> confs_;
  FormMode mode_ = FormMode::KahlerForm;
};

/// Solves form_t(X, .) = -alpha_dot_t for the ambient vector X.
inline CVec moser_vector_field(const FormFamily& fam, const KahlerChart& chart_t, const CVec& z) {
  if (!chart_t.in_domain(z)) fail(ErrorKind::LeftDomain, chart_t.name() + ": Moser flow left the domain");
  RVec a = fam.alpha_dot(chart_t, z);
  if (a.cwiseAbs().maxCoeff() == 0.0) return CVec::Zero(fam.n());
  RMat W = fam.form(chart_t, z);
  Eigen::FullPivLU<RMat> lu(W.transpose());
  double scale = W.cwiseAbs().maxCoeff();
  if (scale == 0.0 || std::abs(lu.determinant()) < 1e-12 * std::pow(scale, W.rows()))
    fail(ErrorKind::DegenerateForm, "form is degenerate at the current point");
  return to_cplx(lu.solve(-a));
}

inline CVec moser_vector_field(const FormFamily& fam, double t, const CVec& z) {
  return moser_vector_field(fam, fam.chart(t), z);
}

/// sup over nodes of the pulled-back form (zero for curves).
inline double pullback_defect(const GridImmersion& imm, const FormFamily& fam, double t) {
  if (imm.n() < 2) return 0.0;
  auto chart_t = share(fam.chart(t));
  GridImmersion at = imm.with_chart(chart_t);
  GridTwoForm f = fam.mode() == FormMode::KahlerForm ? pullback_kahler_form(at) : pullback_ricci_form(at);
  return sup_norm(f);
}

struct MoserResult {
  GridImmersion immersion;  // final immersion, bound to the chart at t_end
  std::vector<double> times;
  std::vector<double> defects;
};

/// RK4 transport of every node by z' = X_t(z) from t_start to t_end.
inline MoserResult moser_flow(const GridImmersion& imm, const FormFamily& fam, double t_start, double t_end, int steps,
                              bool trace = true) {
  imm.require_valid();
  if (steps < 1) fail(ErrorKind::DimensionMismatch, "moser_flow needs at least one step");
  double d0 = pullback_defect(imm, fam, t_start);
  if (d0 > kLagrangianTol)
    fail(ErrorKind::InvalidImmersion, "initial immersion is not Lagrangian for the family form (defect " + std::to_string(d0) + ")");
  MoserResult out;
  out.times.push_back(t_start);
  out.defects.push_back(d0);
  std::vector<CVec> pts = imm.points();
  const double dt = (t_end - t_start) / steps;
  auto field = [&](const KahlerChart& c, const std::vector<CVec>& p) {
    std::vector<CVec> v(p.size());
    parallel_for(static_cast<int>(p.size()), [&](int i) { v[i] = moser_vector_field(fam, c, p[i]); });
    return v;
  };
  auto shifted = [](const std::vector<CVec>& p, double h, const std::vector<CVec>& v) {
    std::vector<CVec> q(p.size());
    for (size_t i = 0; i < p.size(); ++i) q[i] = p[i] + h * v[i];
    return q;
  };
  for (int s = 0; s < steps; ++s) {
    double t = t_start + s * dt;
    if (!fam.trivial()) {
      KahlerChart c0 = fam.chart(t), ch = fam.chart(t + dt / 2), c1 = fam.chart(t + dt);
      auto k1 = field(c0, pts);
      auto k2 = field(ch, shifted(pts, dt / 2, k1));
      auto k3 = field(ch, shifted(pts, dt / 2, k2));
      auto k4 = field(c1, shifted(pts, dt, k3));
      for (size_t i = 0; i < pts.size(); ++i) pts[i] += dt / 6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (trace || s + 1 == steps) {
      GridImmersion cur = imm.with_points(pts);
      if (!cur.valid()) fail(ErrorKind::InvalidImmersion, "Moser transport: " + cur.invalid_reason());
      out.times.push_back(t + dt);
      out.defects.push_back(pullback_defect(cur, fam, t + dt));
    }
  }
  out.immersion = imm.with_points(pts).with_chart(share(fam.chart(t_end)));
  return out;
}

inline MoserResult moser_flow(const GridImmersion& imm, const FormFamily& fam, double t_end, int steps,
                              bool trace = true) {
  return moser_flow(imm, fam, 0.0, t_end, steps, trace);
}

}  // namespace trgeom
