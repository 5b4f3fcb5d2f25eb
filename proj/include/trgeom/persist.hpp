#pragma once

// Scalar Maslov map F~, Newton continuation of J-minimal immersions and the uniqueness probe.

#include <random>
#include <sstream>

#include "isotopy.hpp"
#include "linearize.hpp"

namespace trgeom {

namespace detail {
inline std::string sci(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}
}  // namespace detail

/// Spectral antiderivative on a periodic line, zero at index 0. The mean of g is dropped
/// (and the Nyquist mode for even N, which the spectral derivative annihilates).
inline RVec periodic_antiderivative(const RVec& g) {
  const int N = static_cast<int>(g.size());
  const int kmax = (N - 1) / 2;
  RVec out = RVec::Zero(N);
  for (int k = 1; k <= kmax; ++k) {
    double c = 0, s = 0;
    for (int j = 0; j < N; ++j) {
      double th = 2 * M_PI * k * j / N;
      c += g[j] * std::cos(th);
      s += g[j] * std::sin(th);
    }
    c *= 2.0 / N;
    s *= 2.0 / N;
    // g ~ c cos(k th) + s sin(k th)  ->  (c sin(k th) - s cos(k th)) / k
    for (int j = 0; j < N; ++j) {
      double th = 2 * M_PI * k * j / N;
      out[j] += (c * std::sin(th) - s * (std::cos(th) - 1.0)) / k;
    }
  }
  return out;
}

/// Potential of a closed grid 1-form along axis-ordered staircase paths from node 0.
/// Also reports the largest period (mean times 2 pi) over all grid lines.
inline RVec integrate_closed_form(const GridShape& g, const RMat& xi, double* max_period = nullptr) {
  const int n = g.axes();
  std::vector<RVec> A(n, RVec::Zero(g.size()));
  double worst = 0;
  for (int a = 0; a < n; ++a) {
    const int N = g.dim(a);
    RVec line(N);
    for (int node = 0; node < g.size(); ++node) {
      if (g.coord(node, a) != 0) continue;
      for (int k = 0; k < N; ++k) line[k] = xi(g.neighbor(node, a, k).node, a);
      worst = std::max(worst, std::abs(line.mean()) * 2 * M_PI);
      RVec anti = periodic_antiderivative(line);
      for (int k = 0; k < N; ++k) A[a][g.neighbor(node, a, k).node] = anti[k];
    }
  }
  if (max_period) *max_period = worst;
  RVec F(g.size());
  for (int node = 0; node < g.size(); ++node) {
    auto m = g.multi(node);
    std::vector<int> path(n, 0);
    double acc = 0;
    for (int a = 0; a < n; ++a) {
      path[a] = m[a];
      acc += A[a][g.index(path)];
    }
    F[node] = acc;
  }
  return F;
}

struct ScalarMaslov {
  RVec F;                 // zero vol_J-mean of the base
  GridImmersion moved;    // iota_{df}
  RMat xi;                // xi_J of iota_{df}
  double sup_xi = 0;
  double max_period = 0;  // largest loop integral of xi over grid lines
};

struct MaslovMapOptions {
  WeinsteinChart chart = WeinsteinChart::Auto;
  double exact_tol = 1e-6;
};

/// F~(f): the zero-mean function whose differential is xi_J[iota_{df}].
inline ScalarMaslov scalar_maslov(const GridImmersion& imm, const RVec& f, const MaslovMapOptions& opt = {}) {
  if (f.size() != imm.size()) fail(ErrorKind::DimensionMismatch, "f has the wrong number of nodes");
  IntrinsicCalculus ic(imm);
  ScalarMaslov out;
  out.moved = weinstein_immersion(imm, ic.d(f), opt.chart);
  auto md = maslov_form(out.moved);
  out.xi = md.xi;
  out.sup_xi = md.sup_norm;
  out.F = integrate_closed_form(imm.shape(), out.xi, &out.max_period);
  if (out.max_period > opt.exact_tol)
    fail(ErrorKind::NotExact, "xi_J has period " + detail::sci(out.max_period) + " above " + detail::sci(opt.exact_tol));
  out.F = remove_mean(out.F, volume_fields(imm).volj);
  return out;
}

// ---- Newton ----------------------------------------------------------------

enum class JacobianChoice {
  Current,           // L~ at the current iterate
  Base,              // L~ at the base immersion, factored once
  FiniteDifference,  // central differences of F~ (exact derivative, 2N evaluations)
};

struct NewtonOptions {
  double tol = 1e-10;          // stop when sup|xi_J| reaches this
  double certify_tol = 1e-8;   // accepted solutions must satisfy sup|xi_J| <= certify_tol
  int max_iter = 20;
  JacobianChoice jacobian = JacobianChoice::Current;
  std::vector<RVec> kernel;    // scalar modes projected out of residual and update (vol_J inner product)
  MaslovMapOptions map;
  double min_eigenvalue = 1e-6;
};

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  std::vector<double> residuals;  // sup|xi_J| per iterate, starting with the initial guess
  std::vector<double> ratios;     // r_{k+1} / r_k^2 for r_k in [1e-8, 1e-3]
  RVec f;
  GridImmersion immersion;
  double sup_xi = 0;
  double lagrangian_defect = 0;
  double max_period = 0;
  double kernel_residual = 0;     // size of the projected-out part of F~
};

namespace detail {

/// Removes the span of the modes from v, orthogonally for sum(w u v).
inline RVec project_out(const RVec& v, const std::vector<RVec>& modes, const RVec& w) {
  if (modes.empty()) return v;
  const int m = static_cast<int>(modes.size());
  RMat G(m, m);
  RVec b(m);
  for (int i = 0; i < m; ++i) {
    b[i] = modes[i].cwiseProduct(w).dot(v);
    for (int j = 0; j < m; ++j) G(i, j) = modes[i].cwiseProduct(w).dot(modes[j]);
  }
  RVec c = G.ldlt().solve(b);
  RVec out = v;
  for (int i = 0; i < m; ++i) out -= c[i] * modes[i];
  return out;
}

inline double sup_abs(const RVec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Non-constant scalars with d f = 0 on the grid: products of Nyquist modes (-1)^i along even axes.
/// F~ cannot see them, so a Jacobian built from F~ alone is singular there.
inline std::vector<RVec> invisible_modes(const GridImmersion& imm) {
  const auto& g = imm.shape();
  std::vector<int> even;
  for (int a = 0; a < g.axes(); ++a)
    if (g.dim(a) % 2 == 0) even.push_back(a);
  std::vector<RVec> out;
  IntrinsicCalculus ic(imm);
  for (int mask = 1; mask < (1 << even.size()); ++mask) {
    RVec v(g.size());
    for (int i = 0; i < g.size(); ++i) {
      int parity = 0;
      for (size_t b = 0; b < even.size(); ++b)
        if (mask >> b & 1) parity += g.coord(i, even[b]);
      v[i] = parity % 2 ? -1.0 : 1.0;
    }
    if (ic.d(v).cwiseAbs().maxCoeff() < 1e-9) out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Newton iteration f <- f - L~^{-1} F~(f) on zero-mean scalars at a fixed base immersion.
inline NewtonReport newton_solve(const GridImmersion& base, const RVec& f0, const NewtonOptions& opt = {}) {
  ricci_endomorphism(base);  // SingularA gate
  const RVec w0 = volume_fields(base).volj;
  const std::vector<RVec> invisible = detail::invisible_modes(base);
  std::vector<RVec> fixed = opt.kernel;  // directions the update must not move along
  fixed.insert(fixed.end(), invisible.begin(), invisible.end());
  fixed.push_back(RVec::Ones(base.size()));
  NewtonReport rep;
  RVec f = remove_mean(f0, w0);
  std::optional<Eigen::PartialPivLU<RMat>> base_lu;
  double r_first = -1;
  for (int it = 0;; ++it) {
    ScalarMaslov sm = scalar_maslov(base, f, opt.map);
    RVec F = sm.F;
    double r = sm.sup_xi;
    if (!opt.kernel.empty()) {
      RVec Fp = detail::project_out(F, opt.kernel, w0);
      rep.kernel_residual = detail::sup_abs(F - Fp);
      F = Fp;
      r = form_norm(base, IntrinsicCalculus(base).d(F)).maxCoeff();
    }
    if (!rep.residuals.empty() && rep.residuals.back() >= 1e-8 && rep.residuals.back() <= 1e-3)
      rep.ratios.push_back(r / (rep.residuals.back() * rep.residuals.back()));
    rep.residuals.push_back(r);
    if (r_first < 0) r_first = r;
    rep.f = f;
    rep.immersion = sm.moved;
    rep.sup_xi = sm.sup_xi;
    rep.max_period = sm.max_period;
    rep.iterations = it;
    bool stalled = rep.residuals.size() >= 2 && r > 0.5 * rep.residuals[rep.residuals.size() - 2];
    if (r <= opt.tol || (stalled && r <= opt.certify_tol)) {
      rep.converged = true;
      break;
    }
    if (it >= opt.max_iter || !std::isfinite(r) || r > 1e3 * std::max(r_first, 1e-3)) {
      fail(ErrorKind::NewtonDiverged, "Newton stopped at residual " + detail::sci(r) + " after " + std::to_string(it) + " iterations");
    }

    const GridImmersion& at = opt.jacobian == JacobianChoice::Current ? sm.moved : base;
    RVec rhs = -F;
    RVec delta;
    if (opt.jacobian == JacobianChoice::Base && base_lu) {
      RVec r2 = RVec::Zero(base_lu->rows());
      r2.head(rhs.size()) = rhs;
      delta = base_lu->solve(r2).head(base.size());
    } else {
      auto op = operator_Ltilde(at, std::numeric_limits<double>::infinity());
      RMat M;
      if (opt.jacobian == JacobianChoice::FiniteDifference) {
        const int n = base.size();
        const double h = 1e-6;
        M.resize(n, n);
        RVec e = RVec::Zero(n);
        for (int j = 0; j < n; ++j) {
          e[j] = h;
          M.col(j) = (scalar_maslov(base, f + e, opt.map).F - scalar_maslov(base, f - e, opt.map).F) / (2 * h);
          e[j] = 0;
        }
        M += RVec::Ones(n) * (w0.transpose() / w0.sum());  // constants are invisible to F~; map them to themselves
        for (const RVec& v : invisible) M += v * (v.cwiseProduct(w0).transpose() / v.cwiseProduct(w0).dot(v));
      } else {
        M = op.assemble();
      }
      if (!opt.kernel.empty()) {
        // bordered system: L~ delta + sum mu_j k_j = rhs with delta orthogonal to the modes
        const int n = static_cast<int>(M.rows()), m = static_cast<int>(opt.kernel.size());
        RMat B = RMat::Zero(n + m, n + m);
        B.topLeftCorner(n, n) = M;
        for (int j = 0; j < m; ++j) {
          B.block(0, n + j, n, 1) = opt.kernel[j];
          B.block(n + j, 0, 1, n) = opt.kernel[j].cwiseProduct(w0).transpose();
        }
        M = B;
        RVec r2 = RVec::Zero(n + m);
        r2.head(n) = rhs;
        rhs = r2;
      } else if (M.rows() <= 2048) {
        RVec ev = spectrum(op, 1);
        if (std::abs(ev[0]) < opt.min_eigenvalue)
          fail(ErrorKind::SingularJacobian, "L~ has eigenvalue " + detail::sci(ev[0]));
      }
      Eigen::PartialPivLU<RMat> lu(M);
      if (!(std::abs(lu.determinant()) > 0)) fail(ErrorKind::SingularJacobian, "L~ is singular");
      delta = lu.solve(rhs).head(base.size());
      if (opt.jacobian == JacobianChoice::Base) base_lu = std::move(lu);
    }
    delta = detail::project_out(delta, fixed, w0);
    f += delta;
  }
  if (rep.immersion.n() >= 2) rep.lagrangian_defect = sup_norm(pullback_ricci_form(rep.immersion));
  return rep;
}

// ---- continuation ----------------------------------------------------------

struct ContinuationProblem {
  GridImmersion base;  // J-minimal at t = 0
  FormFamily family;   // chart path; mode ricci-form for the Moser-transported base
  NewtonOptions newton;
  int steps = 10;
  bool moser_base = true;    // transport the base by the Moser flow of the family
  double moser_dt = 0.01;
  double min_step = 1.0 / 1024;
  double critical_tol = kCriticalTol;
};

struct ContinuationStep {
  double t = 0;
  NewtonReport newton;
  double base_period = 0;  // largest loop integral of xi_J on the transported base
  bool certified = false;
};

struct ContinuationReport {
  std::vector<ContinuationStep> steps;
  int bisections = 0;
  RVec f;
  GridImmersion immersion;
  GridImmersion base;
  double t = 0;
};

/// Base immersion at parameter t: Moser transported from t = 0 (or just re-bound to chart_t).
inline GridImmersion transported_base(const ContinuationProblem& p, double t) {
  if (t == 0.0) return p.base;
  if (!p.moser_base || p.family.trivial()) return p.base.with_chart(share(p.family.chart(t)));
  int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) / p.moser_dt - 1e-9)));
  return moser_flow(p.base, p.family, 0.0, t, steps, false).immersion;
}

/// Continues a solution from t_from to t_to in p.steps equal steps, bisecting failed steps.
inline ContinuationReport continuation(const ContinuationProblem& p, double t_from = 0.0, double t_to = 1.0,
                                       std::optional<RVec> f_start = std::nullopt) {
  if (t_from == 0.0) require_critical(p.base, p.critical_tol);
  ContinuationReport rep;
  RVec f = f_start ? *f_start : RVec::Zero(p.base.size());
  double t = t_from;
  double h = (t_to - t_from) / p.steps;
  auto solve_at = [&](double tt) {
    ContinuationStep st;
    st.t = tt;
    GridImmersion base = transported_base(p, tt);
    st.base_period = 0;
    integrate_closed_form(base.shape(), maslov_form(base).xi, &st.base_period);
    st.newton = newton_solve(base, f, p.newton);
    // with a kernel only the projected equation is solved; its residual is what gets certified
    const double achieved = p.newton.kernel.empty() ? st.newton.sup_xi : st.newton.residuals.back();
    st.certified = st.newton.converged && achieved <= p.newton.certify_tol;
    if (!st.certified)
      fail(ErrorKind::StepFailed, "step at t = " + std::to_string(tt) + " not certified");
    rep.base = base;
    return st;
  };
  rep.steps.push_back(solve_at(t));
  f = rep.steps.back().newton.f;
  const double dir = t_to >= t_from ? 1.0 : -1.0;
  while (dir * (t_to - t) > 1e-12) {
    double step = dir * std::min(std::abs(h), std::abs(t_to - t));
    try {
      rep.steps.push_back(solve_at(t + step));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NewtonDiverged && e.kind() != ErrorKind::StepFailed && e.kind() != ErrorKind::NotExact &&
          e.kind() != ErrorKind::InvalidImmersion)
        throw;
      h /= 2;
      ++rep.bisections;
      if (std::abs(h) < p.min_step)
        fail(ErrorKind::ContinuationStalled, "step below minimum at t = " + std::to_string(t) + ": " + e.what());
      continue;
    }
    t += step;
    f = rep.steps.back().newton.f;
  }
  rep.f = f;
  rep.t = t;
  rep.immersion = rep.steps.back().newton.immersion;
  return rep;
}

// ---- uniqueness probe ------------------------------------------------------

/// Random smooth zero-mean grid function with sup norm 1.
inline RVec random_smooth_function(const GridShape& g, std::mt19937& rng, int kmax = 4) {
  std::normal_distribution<double> nd;
  RVec f = RVec::Zero(g.size());
  std::vector<int> k(g.axes(), 0);
  std::function<void(int)> rec = [&](int a) {
    if (a == g.axes()) {
      int k2 = 0;
      for (int v : k) k2 += v * v;
      if (k2 == 0) return;
      double amp = 1.0 / (1.0 + k2), c = amp * nd(rng), s = amp * nd(rng);
      for (int i = 0; i < g.size(); ++i) {
        double ph = 0;
        for (int b = 0; b < g.axes(); ++b) ph += k[b] * g.theta(i, b);
        f[i] += c * std::cos(ph) + s * std::sin(ph);
      }
      return;
    }
    for (k[a] = -kmax; k[a] <= kmax; ++k[a]) rec(a + 1);
    k[a] = 0;
  };
  rec(0);
  return f / f.cwiseAbs().maxCoeff();
}

struct UniquenessReport {
  double c1 = 0;            // sup |f| / |L~ f| over random f
  double c1_exact = 0;      // sup-norm bound of L~^{-1} on zero-mean functions
  double c2 = 0;            // sup |F~(f) - L~ f| / |f|^2 over random f up to the probe radius
  double radius = 0;        // 1 / (c1 c2)
  double probe_radius = 0;  // radius used for the Newton starts
  std::vector<double> scaling_ratios;  // remainder(s) / remainder(s / 2) at the scaling scale
  int trials = 0;
  int converged = 0;
  double worst_final_norm = 0;
};

struct UniquenessOptions {
  double radius_fraction = 0.5;  // probe at this fraction of 1 / (c1 c2) unless radius is given
  std::optional<double> radius;
  int trials = 100;
  int samples = 10;
  double small = 1e-2;           // smallest sup norm used for c2
  double scaling_scale = 3e-4;   // sup norm for the 4x remainder scaling test
  unsigned seed = 1;
  NewtonOptions newton;
};

inline UniquenessReport uniqueness_probe(const GridImmersion& imm, const UniquenessOptions& opt = {}) {
  require_critical(imm, kCriticalTol);
  auto ric = ricci_endomorphism(imm);
  if (ric.sign != -1) fail(ErrorKind::SingularA, "uniqueness probe needs a negative definite Ricci form on L");
  auto op = operator_Ltilde(imm);
  RMat M = op.assemble();
  const RVec w = op.weight;
  std::mt19937 rng(opt.seed);
  UniquenessReport rep;
  const RVec base_F = scalar_maslov(imm, RVec::Zero(imm.size()), opt.newton.map).F;
  auto random_unit = [&] {
    RVec f = remove_mean(random_smooth_function(imm.shape(), rng), w);
    return RVec(f / detail::sup_abs(f));
  };
  auto remainder = [&](const RVec& f) {
    return detail::sup_abs(remove_mean(RVec(scalar_maslov(imm, f, opt.newton.map).F - base_F - M * f), w));
  };
  auto c2_at = [&](double scale) {
    double c = 0;
    for (int s = 0; s < opt.samples; ++s) c = std::max(c, remainder(scale * random_unit()) / (scale * scale));
    return c;
  };

  for (int s = 0; s < opt.samples; ++s) {
    RVec f = random_unit();
    rep.c1 = std::max(rep.c1, 1.0 / detail::sup_abs(M * f));
    RVec fs = opt.scaling_scale * f;
    rep.scaling_ratios.push_back(remainder(fs) / remainder(0.5 * fs));
  }
  {
    RMat P = RMat::Identity(M.rows(), M.cols()) - RVec::Ones(M.rows()) * (w.transpose() / w.sum());
    RMat Minv = M.partialPivLu().inverse() * P;
    rep.c1_exact = Minv.cwiseAbs().rowwise().sum().maxCoeff();
  }
  const double c1 = std::max(rep.c1, rep.c1_exact);
  // the quadratic bound has to hold on the whole probed ball, so c2 is re-measured at the probe radius
  rep.c2 = c2_at(opt.small);
  for (int it = 0; it < 8; ++it) {
    double probe = opt.radius ? *opt.radius : opt.radius_fraction / (c1 * rep.c2);
    if (probe <= opt.small) break;
    double c = c2_at(probe);
    if (c <= rep.c2) break;
    rep.c2 = c;
  }
  rep.radius = 1.0 / (c1 * rep.c2);
  rep.probe_radius = opt.radius ? *opt.radius : opt.radius_fraction * rep.radius;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  rep.trials = opt.trials;
  for (int k = 0; k < opt.trials; ++k) {
    RVec f0 = rep.probe_radius * u(rng) * random_unit();
    try {
      auto nr = newton_solve(imm, f0, opt.newton);
      double nf = detail::sup_abs(nr.f);
      rep.worst_final_norm = std::max(rep.worst_final_norm, nf);
      if (nr.converged && nf <= 1e-8) ++rep.converged;
    } catch (const Error&) {
      rep.worst_final_norm = std::numeric_limits<double>::infinity();
    }
  }
  return rep;
}

}  // namespace trgeom
