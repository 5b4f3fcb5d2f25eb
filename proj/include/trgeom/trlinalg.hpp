#pragma once

// Pointwise linear algebra of totally real planes in a Hermitian vector space.
// A vector of C^n is a complex column; J is multiplication by i. The Hermitian
// form is h(u, v) = u^T h conj(v), so g = Re h and omega = -Im h.

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "errors.hpp"

namespace trgeom {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kTotallyRealTol = 1e-10;

struct HermitianStructure {
  CMat h;

  int dim() const { return static_cast<int>(h.rows()); }
  cd operator()(const CVec& u, const CVec& v) const { return u.transpose() * h * v.conjugate(); }
  double metric(const CVec& u, const CVec& v) const { return (*this)(u, v).real(); }
  double omega(const CVec& u, const CVec& v) const { return -(*this)(u, v).imag(); }

  static HermitianStructure identity(int n) { return {CMat::Identity(n, n)}; }
};

/// Columns are the frame vectors.
using TangentFrame = CMat;

struct Projections {
  RMat PL, PJ;
};

struct CanonicalVolume {
  cd coefficient;  // Omega = coefficient * dz_1 ^ ... ^ dz_n
  cd value;        // Omega evaluated on the orthonormalized frame
  double rho;
};

inline RVec to_real(const CVec& v) {
  RVec r(2 * v.size());
  r << v.real(), v.imag();
  return r;
}

inline CVec to_cplx(const RVec& r) {
  const auto n = r.size() / 2;
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cd(r[i], r[i + n]);
  return v;
}

/// Real matrix of multiplication by i on (Re, Im) coordinates.
inline RMat complex_structure(int n) {
  RMat J = RMat::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = -RMat::Identity(n, n);
  J.bottomLeftCorner(n, n) = RMat::Identity(n, n);
  return J;
}

/// The real 2n x 2n Gram matrix of g = Re h in (Re, Im) coordinates.
inline RMat real_metric(const HermitianStructure& H) {
  const int n = H.dim();
  RMat G(2 * n, 2 * n);
  RMat hr = H.h.real(), hi = H.h.imag();
  G << hr, hi, -hi, hr;
  return G;
}

inline void check_dims(const TangentFrame& frame, const HermitianStructure& H) {
  if (frame.rows() != H.dim() || frame.cols() != H.dim())
    fail(ErrorKind::DimensionMismatch, "frame is " + std::to_string(frame.rows()) + "x" +
                                           std::to_string(frame.cols()) + ", metric has dimension " +
                                           std::to_string(H.dim()));
}

inline CMat hermitian_gram(const TangentFrame& frame, const HermitianStructure& H) {
  check_dims(frame, H);
  return frame.transpose() * H.h * frame.conjugate();
}

inline double totally_real_defect(const TangentFrame& frame, const HermitianStructure& H) {
  check_dims(frame, H);
  return std::abs(frame.determinant());
}

inline double totally_real_defect(const TangentFrame& frame) {
  return std::abs(frame.determinant());
}

inline void require_totally_real(const TangentFrame& frame, double tol) {
  double d = std::abs(frame.determinant());
  if (!(d > tol)) fail(ErrorKind::NearComplexPlane, "|det_C frame| = " + std::to_string(d));
}

/// Modified Gram-Schmidt under Re h. Returns E with columns orthonormal for g;
/// frame = E * R with R upper triangular, positive diagonal.
inline TangentFrame gram_schmidt(const TangentFrame& frame, const HermitianStructure& H) {
  TangentFrame E = frame;
  for (int i = 0; i < E.cols(); ++i) {
    for (int j = 0; j < i; ++j) E.col(i) -= H.metric(E.col(i), E.col(j)) * E.col(j);
    double nrm = std::sqrt(H.metric(E.col(i), E.col(i)));
    E.col(i) /= nrm;
  }
  return E;
}

inline double rho_j(const TangentFrame& frame, const HermitianStructure& H, double tol = kTotallyRealTol) {
  check_dims(frame, H);
  require_totally_real(frame, tol);
  TangentFrame E = gram_schmidt(frame, H);
  cd det = (E.transpose() * H.h * E.conjugate()).determinant();
  return std::sqrt(std::max(det.real(), 0.0));
}

inline CanonicalVolume canonical_volume_coefficients(const TangentFrame& frame, const HermitianStructure& H,
                                                     double tol = kTotallyRealTol) {
  check_dims(frame, H);
  require_totally_real(frame, tol);
  TangentFrame E = gram_schmidt(frame, H);
  cd detE = E.determinant();
  double unit = std::sqrt(H.h.determinant().real());
  cd coefficient = unit * std::exp(cd(0, -std::arg(detE)));
  cd value = coefficient * detE;
  return {coefficient, value, std::abs(value)};
}

inline double lagrangian_defect(const TangentFrame& frame, const HermitianStructure& H) {
  check_dims(frame, H);
  TangentFrame E = gram_schmidt(frame, H);
  double worst = 0.0;
  for (int i = 0; i < E.cols(); ++i)
    for (int j = i + 1; j < E.cols(); ++j) worst = std::max(worst, std::abs(H.omega(E.col(i), E.col(j))));
  return worst;
}

/// Real 2n x 2n matrix whose columns are (v_1..v_n, J v_1..J v_n).
inline RMat real_basis(const TangentFrame& frame) {
  const auto n = frame.rows();
  RMat B(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < frame.cols(); ++i) {
    B.col(i) = to_real(frame.col(i));
    B.col(i + n) = to_real(cd(0, 1) * frame.col(i));
  }
  return B;
}

inline Projections projections(const TangentFrame& frame, double tol = kTotallyRealTol) {
  require_totally_real(frame, tol);
  const auto n = frame.rows();
  RMat B = real_basis(frame);
  RMat D = RMat::Zero(2 * n, 2 * n);
  D.topLeftCorner(n, n).setIdentity();
  Eigen::PartialPivLU<RMat> lu(B);
  RMat PL = B * D * lu.inverse();
  RMat PJ = RMat::Identity(2 * n, 2 * n) - PL;
  return {PL, PJ};
}

/// vol_g(e_1..e_n, Je_1..Je_n) for the g-orthonormalized frame.
inline double riemannian_volume_of_ej(const TangentFrame& frame, const HermitianStructure& H) {
  TangentFrame E = gram_schmidt(frame, H);
  return real_basis(E).determinant() * std::sqrt(real_metric(H).determinant());
}

}  // namespace trgeom
