#pragma once

// Variations of the J-volume, the linearised Maslov operators L and L~, and the
// Weinstein-type chart iota_alpha.

#include <Eigen/Eigenvalues>
#include <functional>
#include <numeric>
#include <optional>

#include "maslov.hpp"
#include "parallel.hpp"

namespace trgeom {

inline constexpr double kCriticalTol = 1e-4;

struct RicciEndomorphism {
  std::vector<RMat> R;  // iota^* Ric in grid components
  std::vector<RMat> A;  // g^{-1} R
  int sign = 0;         // +1, -1, or 0 for indefinite
  double min_abs_det = 0;
};

inline RicciEndomorphism ricci_endomorphism(const GridImmersion& imm, bool require_invertible = true) {
  imm.require_valid();
  auto g = induced_metric(imm);
  RicciEndomorphism out;
  out.R.resize(imm.size());
  out.A.resize(imm.size());
  bool pos = true, neg = true;
  out.min_abs_det = std::numeric_limits<double>::infinity();
  for (int i = 0; i < imm.size(); ++i) {
    CMat hR = ricci_form_at(imm.chart(), imm.point(i)).hR;
    const auto& F = imm.tangent_frame(i);
    RMat R = (F.transpose() * hR * F.conjugate()).real();
    out.R[i] = 0.5 * (R + R.transpose());
    out.A[i] = g[i].ldlt().solve(out.R[i]);
    Eigen::GeneralizedSelfAdjointEigenSolver<RMat> es(out.R[i], g[i], Eigen::EigenvaluesOnly);
    pos = pos && es.eigenvalues().minCoeff() > 0;
    neg = neg && es.eigenvalues().maxCoeff() < 0;
    out.min_abs_det = std::min(out.min_abs_det, std::abs(out.A[i].determinant()));
  }
  out.sign = pos ? 1 : (neg ? -1 : 0);
  if (require_invertible && out.min_abs_det < 1e-10)
    fail(ErrorKind::SingularA, "Ricci endomorphism not invertible (min |det A| = " + std::to_string(out.min_abs_det) + ")");
  return out;
}

// ---- first-order fields ----------------------------------------------------

/// Y = -A^{-1} alpha^sharp = -R^{-1} alpha, grid components.
inline RMat normal_field_from_form(const RicciEndomorphism& ric, const RMat& alpha) {
  RMat Y(alpha.rows(), alpha.cols());
  for (int i = 0; i < alpha.rows(); ++i) Y.row(i) = -(ric.R[i].ldlt().solve(RVec(alpha.row(i).transpose()))).transpose();
  return Y;
}

/// Moves each node along the ambient geodesic with initial velocity v_i.
inline GridImmersion ambient_displace(const GridImmersion& imm, const std::vector<CVec>& v, double t = 1.0,
                                      int steps = 16) {
  std::vector<CVec> pts(imm.size());
  parallel_for(imm.size(), [&](int i) { pts[i] = ambient_exp(imm.chart(), imm.point(i), t * v[i], steps); });
  return imm.with_points(std::move(pts));
}

enum class WeinsteinChart {
  Auto,              // symplectic normal chart for n = 1, first-order chart otherwise
  FirstOrder,        // exp along J iota_* Y with Y = -A^{-1} alpha^sharp
  SymplecticNormal,  // n = 1: normal geodesic offset whose swept rho-area equals -alpha exactly
};

namespace detail {

/// n = 1: walks the unit-speed normal geodesic from z with the Jacobi field of the parallel curves
/// (J(0) = 1, J'(0) = kappa) and returns the point where P(r) = int_0^r K J = target.
inline CVec symplectic_normal_point(const KahlerChart& chart, const CVec& z0, cd normal, double kappa, double target) {
  struct State {
    CVec z;
    CVec w;
    double J, dJ, P;
  };
  auto rhs = [&](const State& s) {
    if (!chart.in_domain(s.z)) fail(ErrorKind::LeftDomain, chart.name() + ": normal geodesic left the domain");
    double K = gauss_curvature(chart, s.z);
    CVec acc = -christoffel_contract(christoffel_at(chart, s.z), s.w, s.w);
    return State{s.w, acc, s.dJ, -K * s.J, K * s.J};
  };
  auto axpy = [](const State& s, double h, const State& d) {
    return State{s.z + h * d.z, s.w + h * d.w, s.J + h * d.J, s.dJ + h * d.dJ, s.P + h * d.P};
  };
  auto advance = [&](State s, double dr) {
    const double hmax = 2.5e-3;
    int steps = std::max(1, static_cast<int>(std::ceil(std::abs(dr) / hmax)));
    double h = dr / steps;
    for (int k = 0; k < steps; ++k) {
      State k1 = rhs(s), k2 = rhs(axpy(s, h / 2, k1)), k3 = rhs(axpy(s, h / 2, k2)), k4 = rhs(axpy(s, h, k3));
      s = State{s.z + h / 6 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z), s.w + h / 6 * (k1.w + 2 * k2.w + 2 * k3.w + k4.w),
                s.J + h / 6 * (k1.J + 2 * k2.J + 2 * k3.J + k4.J), s.dJ + h / 6 * (k1.dJ + 2 * k2.dJ + 2 * k3.dJ + k4.dJ),
                s.P + h / 6 * (k1.P + 2 * k2.P + 2 * k3.P + k4.P)};
    }
    return s;
  };
  if (target == 0.0) return z0;
  State s{z0, CVec::Constant(1, normal), 1.0, kappa, 0.0};
  double K0 = gauss_curvature(chart, z0);
  if (std::abs(K0) < 1e-12) fail(ErrorKind::SingularA, "zero curvature: symplectic normal chart undefined");
  double r = 0.0, dr = target / K0;
  for (int it = 0; it < 30; ++it) {
    s = advance(s, dr);
    r += dr;
    double slope = gauss_curvature(chart, s.z) * s.J;
    if (std::abs(slope) < 1e-14) fail(ErrorKind::SingularA, "symplectic normal chart degenerates");
    dr = (target - s.P) / slope;
    if (std::abs(dr) < 1e-15 * (1.0 + std::abs(r))) break;
  }
  return s.z;
}

}  // namespace detail

/// iota_alpha: deformation of imm by the 1-form alpha (grid components).
inline GridImmersion weinstein_immersion(const GridImmersion& imm, const RMat& alpha,
                                         WeinsteinChart chart = WeinsteinChart::Auto, int exp_steps = 16) {
  imm.require_valid();
  if (alpha.rows() != imm.size() || alpha.cols() != imm.n()) fail(ErrorKind::DimensionMismatch, "alpha shape");
  if (alpha.cwiseAbs().maxCoeff() == 0.0) return imm;
  if (chart == WeinsteinChart::Auto) chart = imm.n() == 1 ? WeinsteinChart::SymplecticNormal : WeinsteinChart::FirstOrder;
  GridImmersion out;
  if (chart == WeinsteinChart::FirstOrder) {
    auto ric = ricci_endomorphism(imm);
    out = ambient_displace(imm, j_pushforward(imm, normal_field_from_form(ric, alpha)), 1.0, exp_steps);
  } else {
    if (imm.n() != 1) fail(ErrorKind::DimensionMismatch, "symplectic normal chart is implemented for curves only");
    RMat xi = maslov_form(imm).xi;
    std::vector<CVec> pts(imm.size());
    parallel_for(imm.size(), [&](int i) {
      cd T = imm.tangent_frame(i)(0, 0);
      double speed = std::sqrt(imm.metric(i).h(0, 0).real()) * std::abs(T);
      cd normal = cd(0, 1) * T / speed;
      pts[i] = detail::symplectic_normal_point(imm.chart(), imm.point(i), normal, xi(i, 0) / speed, -alpha(i, 0) / speed);
    });
    out = imm.with_points(std::move(pts));
  }
  if (!out.valid()) fail(ErrorKind::InvalidImmersion, "iota_alpha: " + out.invalid_reason());
  return out;
}

// ---- variations ------------------------------------------------------------

inline double first_variation(const GridImmersion& imm, const RMat& Y) {
  RMat xi = maslov_form(imm).xi;
  auto vol = volume_fields(imm);
  double s = 0;
  for (int i = 0; i < imm.size(); ++i) s += xi.row(i).dot(Y.row(i)) * vol.volj[i];
  return s * imm.shape().cell_volume();
}

inline void require_critical(const GridImmersion& imm, double tol) {
  double sup = maslov_form(imm).sup_norm;
  if (sup > tol) fail(ErrorKind::NotCritical, "sup|xi_J| = " + std::to_string(sup) + " exceeds " + std::to_string(tol));
}

/// int (Div(rho Y)/rho)^2 vol_J - int Ric(Y, Y) vol_J at a critical immersion.
inline double second_variation_at_critical(const GridImmersion& imm, const RMat& Y, double tol = kCriticalTol) {
  require_critical(imm, tol);
  auto vol = volume_fields(imm);
  RVec dv = rho_divergence(imm, Y);
  auto ric = ricci_endomorphism(imm, false);
  double s = 0;
  for (int i = 0; i < imm.size(); ++i) {
    RVec y = Y.row(i).transpose();
    s += (dv[i] * dv[i] - y.dot(ric.R[i] * y)) * vol.volj[i];
  }
  return s * imm.shape().cell_volume();
}

/// X -> -d(Div(rho Y)/rho)(X) - Ric(X, Y).
inline RMat d_maslov(const GridImmersion& imm, const RMat& Y) {
  IntrinsicCalculus ic(imm);
  RMat out = -ic.d(rho_divergence(imm, Y));
  auto ric = ricci_endomorphism(imm, false);
  for (int i = 0; i < imm.size(); ++i) out.row(i) -= (ric.R[i] * RVec(Y.row(i).transpose())).transpose();
  return out;
}

// ---- operators -------------------------------------------------------------

enum class Domain { ZeroMeanScalar, OneForm };

struct LinearOperator {
  std::function<RVec(const RVec&)> apply;
  int rows = 0;
  Domain domain = Domain::ZeroMeanScalar;
  RVec weight;  // inner-product density; the operator is self-adjoint for sum(w u v)
  std::optional<RMat> matrix;

  RMat assemble() {
    if (matrix) return *matrix;
    RMat M(rows, rows);
    RVec e = RVec::Zero(rows);
    for (int j = 0; j < rows; ++j) {
      e[j] = 1.0;
      M.col(j) = apply(e);
      e[j] = 0.0;
    }
    matrix = M;
    return M;
  }
};

inline RVec flatten(const RMat& form) { return Eigen::Map<const RVec>(form.data(), form.size()); }
inline RMat unflatten(const RVec& v, int nodes, int n) { return Eigen::Map<const RMat>(v.data(), nodes, n); }

/// Shared pieces of L and L~ at an immersion.
struct MaslovOperatorData {
  std::shared_ptr<IntrinsicCalculus> ic;
  RVec w;                  // vol_J density rho sqrt(g)
  std::vector<RMat> Rinv;  // (iota^* Ric)^{-1}
  int sign = 0;

  /// (1/w) d_a(w R^{ab} beta_b)
  RVec weighted_div(const RMat& beta) const {
    RMat V(beta.rows(), beta.cols());
    for (int i = 0; i < beta.rows(); ++i) V.row(i) = (Rinv[i] * RVec(beta.row(i).transpose())).transpose();
    return ic->div_density(V, w);
  }
};

inline MaslovOperatorData maslov_operator_data(const GridImmersion& imm, DiffScheme scheme = DiffScheme::Spectral) {
  auto ric = ricci_endomorphism(imm);
  MaslovOperatorData d;
  d.ic = std::make_shared<IntrinsicCalculus>(imm, scheme);
  d.w = volume_fields(imm).volj;
  d.sign = ric.sign;
  for (const auto& R : ric.R) d.Rinv.push_back(R.inverse());
  return d;
}

/// L~ f = -rho^{-1} d^*(rho A^{-1*} df) + f = (1/w) d_a(w R^{ab} d_b f) + f.
inline LinearOperator operator_Ltilde(const GridImmersion& imm, double critical_tol = kCriticalTol,
                                      DiffScheme scheme = DiffScheme::Spectral) {
  if (std::isfinite(critical_tol)) require_critical(imm, critical_tol);
  auto data = std::make_shared<MaslovOperatorData>(maslov_operator_data(imm, scheme));
  LinearOperator op;
  op.rows = imm.size();
  op.domain = Domain::ZeroMeanScalar;
  op.weight = data->w;
  op.apply = [data](const RVec& f) -> RVec { return data->weighted_div(data->ic->d(f)) + f; };
  return op;
}

/// L alpha = d((1/w) d_a(w R^{ab} alpha_b)) + alpha on 1-forms (flattened nodes x n, column-major).
inline LinearOperator operator_L(const GridImmersion& imm, double critical_tol = kCriticalTol,
                                 DiffScheme scheme = DiffScheme::Spectral) {
  if (std::isfinite(critical_tol)) require_critical(imm, critical_tol);
  auto data = std::make_shared<MaslovOperatorData>(maslov_operator_data(imm, scheme));
  const int nodes = imm.size(), n = imm.n();
  LinearOperator op;
  op.rows = nodes * n;
  op.domain = Domain::OneForm;
  op.weight = RVec::Ones(nodes * n);
  op.apply = [data, nodes, n](const RVec& a) -> RVec {
    RMat alpha = unflatten(a, nodes, n);
    return flatten(data->ic->d(data->weighted_div(alpha)) + alpha);
  };
  return op;
}

inline LinearOperator identity_operator(int rows) {
  LinearOperator op;
  op.rows = rows;
  op.weight = RVec::Ones(rows);
  op.apply = [](const RVec& f) { return f; };
  return op;
}

/// Weighted mean removal: f - (sum w f / sum w).
inline RVec remove_mean(const RVec& f, const RVec& w) { return f.array() - f.dot(w) / w.sum(); }

struct EigenPairs {
  RVec values;
  RMat vectors;  // columns in the operator's variables, unit norm for sum(w v v); empty if not requested
};

/// Eigenpairs of the operator symmetrized in its weight; on the zero-mean scalar domain the
/// constant direction is removed. Keeps the k eigenvalues of smallest magnitude, sorted ascending.
inline EigenPairs eigenpairs(LinearOperator& op, int k, bool with_vectors = true) {
  RMat M = op.assemble();
  RVec s = op.weight.cwiseSqrt();
  RMat S = s.asDiagonal() * M * s.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose());
  RMat Q;
  const bool reduce = op.domain == Domain::ZeroMeanScalar;
  if (reduce) {
    RVec u = s / s.norm();
    RVec v = u;
    v[0] += (u[0] >= 0 ? 1.0 : -1.0);
    v /= v.norm();
    Q = RMat::Identity(op.rows, op.rows) - 2.0 * v * v.transpose();  // Q u = -+e_0
    RMat T = Q * S * Q;
    S = T.bottomRightCorner(op.rows - 1, op.rows - 1);
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(S, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorKind::EigensolverFailure, "symmetric eigensolver did not converge");
  const RVec& lam = es.eigenvalues();
  std::vector<int> idx(lam.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(lam[a]) < std::abs(lam[b]); });
  idx.resize(std::min<size_t>(idx.size(), static_cast<size_t>(k)));
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return lam[a] < lam[b]; });
  EigenPairs out;
  out.values.resize(idx.size());
  if (with_vectors) out.vectors.resize(op.rows, idx.size());
  for (size_t j = 0; j < idx.size(); ++j) {
    out.values[j] = lam[idx[j]];
    if (!with_vectors) continue;
    RVec y = es.eigenvectors().col(idx[j]);
    RVec z = y;
    if (reduce) {
      RVec full = RVec::Zero(op.rows);
      full.tail(op.rows - 1) = y;
      z = Q * full;
    }
    out.vectors.col(j) = z.cwiseQuotient(s);
  }
  return out;
}

inline RVec spectrum(LinearOperator& op, int k) { return eigenpairs(op, k, false).values; }

}  // namespace trgeom
