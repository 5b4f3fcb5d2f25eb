#pragma once

// Maslov form xi_J, J-mean curvature H_J and the canonical-bundle cross-check.

#include <vector>

#include "immersion.hpp"

namespace trgeom {

struct MaslovData {
  RMat xi;               // nodes x n, grid components
  std::vector<CVec> hj;  // ambient H_J per node
  double sup_norm = 0;   // sup of |xi|_g
};

/// Pointwise g-norm of a grid 1-form.
inline RVec form_norm(const GridImmersion& imm, const RMat& xi) {
  auto g = induced_metric(imm);
  RVec out(imm.size());
  for (int i = 0; i < imm.size(); ++i) {
    RVec x = xi.row(i).transpose();
    out[i] = std::sqrt(std::max(0.0, x.dot(g[i].ldlt().solve(x))));
  }
  return out;
}

/// Ambient vector field -J iota_*(xi^sharp).
inline std::vector<CVec> mean_curvature_from(const GridImmersion& imm, const RMat& xi) {
  auto g = induced_metric(imm);
  std::vector<CVec> hj(imm.size());
  for (int i = 0; i < imm.size(); ++i) {
    RVec sharp = g[i].ldlt().solve(RVec(xi.row(i).transpose()));
    hj[i] = cd(0, -1) * (imm.tangent_frame(i) * sharp.cast<cd>());
  }
  return hj;
}

/// Per-node g-orthonormal frame fields (Gram-Schmidt of the coordinate frame).
inline std::vector<CMat> orthonormal_frames(const GridImmersion& imm) {
  std::vector<CMat> E(imm.size());
  for (int i = 0; i < imm.size(); ++i) E[i] = gram_schmidt(imm.tangent_frame(i), imm.metric(i));
  return E;
}

/// Trace formula: xi(d_a) = sum_i g(J pi_J nabla_a E_i, E_i) = -sum_i b_i where b_i is the
/// J E_i-coefficient of nabla_a E_i in the real basis (E, J E).
inline MaslovData maslov_form(const GridImmersion& imm) {
  imm.require_valid();
  const int n = imm.n();
  auto E = orthonormal_frames(imm);
  std::vector<std::vector<CMat>> dE(n);
  for (int a = 0; a < n; ++a) dE[a] = imm.differentiate_vectors(E, a);
  MaslovData out;
  out.xi.resize(imm.size(), n);
  for (int i = 0; i < imm.size(); ++i) {
    auto G = christoffel_at(imm.chart(), imm.point(i));
    Eigen::PartialPivLU<RMat> lu(real_basis(E[i]));
    for (int a = 0; a < n; ++a) {
      CVec X = imm.tangent_frame(i).col(a);
      double acc = 0;
      for (int k = 0; k < n; ++k) {
        CVec cov = dE[a][i].col(k) + christoffel_contract(G, X, E[i].col(k));
        RVec coef = lu.solve(to_real(cov));
        acc -= coef[n + k];
      }
      out.xi(i, a) = acc;
    }
  }
  out.hj = mean_curvature_from(imm, out.xi);
  out.sup_norm = form_norm(imm, out.xi).maxCoeff();
  return out;
}

/// Coefficient c of Omega_J = c dz_1 ^ ... ^ dz_n per node.
inline std::vector<cd> canonical_coefficients(const GridImmersion& imm) {
  std::vector<cd> c(imm.size());
  for (int i = 0; i < imm.size(); ++i) c[i] = canonical_volume_coefficients(imm.tangent_frame(i), imm.metric(i)).coefficient;
  return c;
}

/// Canonical-bundle oracle: xi(d_a) = Im(nabla_a Omega / Omega) with the Chern connection
/// form -d log det h of K, i.e. xi_a = -Im(d_a q / q) - Im(sum_k (d_a iota)^k d_k log det h), q = det_C(frame).
inline RMat maslov_form_oracle(const GridImmersion& imm) {
  imm.require_valid();
  const int n = imm.n();
  std::vector<cd> q(imm.size());
  for (int i = 0; i < imm.size(); ++i) q[i] = imm.tangent_frame(i).determinant();
  RMat xi(imm.size(), n);
  std::vector<CVec> dlog(imm.size());
  for (int i = 0; i < imm.size(); ++i) dlog[i] = log_det_gradient(metric_derivs(imm.chart(), imm.point(i)));
  for (int a = 0; a < n; ++a) {
    auto dq = imm.differentiate(q, a, [](cd v, int, const CMat& J) { return J.determinant() * v; });
    for (int i = 0; i < imm.size(); ++i) {
      cd conn = imm.tangent_frame(i).col(a).transpose() * dlog[i];
      xi(i, a) = -(dq[i] / q[i]).imag() - conn.imag();
    }
  }
  return xi;
}

/// sup over nodes of |d xi - iota^* rho|.
inline double closedness_defect(const GridImmersion& imm, const RMat& xi, DiffScheme scheme = DiffScheme::Spectral) {
  if (imm.n() < 2) return 0.0;
  IntrinsicCalculus ic(imm, scheme);
  GridTwoForm dxi = ic.d(xi);
  GridTwoForm rho = pullback_ricci_form(imm);
  double worst = 0;
  for (int i = 0; i < imm.size(); ++i) worst = std::max(worst, (dxi[i] - rho[i]).cwiseAbs().maxCoeff());
  return worst;
}

inline double closedness_defect(const GridImmersion& imm) { return closedness_defect(imm, maslov_form(imm).xi); }

/// Trapezoid integrals of a grid 1-form along the generator loops through node 0.
inline RVec loop_integrals(const GridImmersion& imm, const RMat& form) {
  RVec out(imm.n());
  for (int a = 0; a < imm.n(); ++a) {
    double s = 0;
    for (int k = 0; k < imm.shape().dim(a); ++k) s += form(imm.shape().neighbor(0, a, k).node, a);
    out[a] = s * imm.shape().spacing(a);
  }
  return out;
}

/// Tangent field X (grid components) pushed to ambient vectors J iota_* X.
inline std::vector<CVec> j_pushforward(const GridImmersion& imm, const RMat& X) {
  std::vector<CVec> v(imm.size());
  for (int i = 0; i < imm.size(); ++i) v[i] = cd(0, 1) * (imm.tangent_frame(i) * RVec(X.row(i).transpose()).cast<cd>());
  return v;
}

inline GridImmersion displace(const GridImmersion& imm, const std::vector<CVec>& v, double s) {
  std::vector<CVec> pts(imm.size());
  for (int i = 0; i < imm.size(); ++i) pts[i] = imm.point(i) + s * v[i];
  return imm.with_points(std::move(pts));
}

/// Div(rho_J X)/rho_J with respect to vol_g, i.e. (1/(rho sqrt g)) d_a(rho sqrt g X^a).
inline RVec rho_divergence(const GridImmersion& imm, const RMat& X, DiffScheme scheme = DiffScheme::Spectral) {
  IntrinsicCalculus ic(imm, scheme);
  return ic.div_density(X, volume_fields(imm).volj);
}

/// sup |nabla_{JX} Omega / Omega + i Div(rho X)/rho|, with the left side from a two-sided
/// difference in s of Omega_J along iota + s J iota_* X.
inline double div_formula_check(const GridImmersion& imm, const RMat& X, double s = 1e-5) {
  imm.require_valid();
  if (X.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  auto V = j_pushforward(imm, X);
  auto cp = canonical_coefficients(displace(imm, V, s));
  auto cm = canonical_coefficients(displace(imm, V, -s));
  auto c0 = canonical_coefficients(imm);
  RVec divr = rho_divergence(imm, X);
  double worst = 0;
  for (int i = 0; i < imm.size(); ++i) {
    cd conn = -(V[i].transpose() * log_det_gradient(metric_derivs(imm.chart(), imm.point(i))))(0);
    cd lhs = (cp[i] - cm[i]) / (2 * s * c0[i]) + conn;
    worst = std::max(worst, std::abs(lhs + cd(0, 1) * divr[i]));
  }
  return worst;
}

}  // namespace trgeom
