#pragma once

// Property suites with fixed seeds. Each criterion returns measured residuals next to their
// bounds; failures are reported, never thrown.

#include <chrono>
#include <random>
#include <sstream>

#include "persist.hpp"

namespace trgeom {

struct Check {
  std::string name;
  double value = 0;
  double bound = 0;
  bool upper = true;  // value <= bound, else value >= bound
  bool pass = false;
};

inline Check at_most(std::string name, double value, double bound) {
  return {std::move(name), value, bound, true, std::isfinite(value) && value <= bound};
}
inline Check at_least(std::string name, double value, double bound) {
  return {std::move(name), value, bound, false, std::isfinite(value) && value >= bound};
}

struct Suite {
  std::string name;
  std::vector<Check> checks;
  std::string error;  // set if the suite aborted
  double seconds = 0;

  bool pass() const {
    if (!error.empty() || checks.empty()) return false;
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void add(Check c) { checks.push_back(std::move(c)); }
};

namespace detail {

template <class Body>
Suite run_suite(std::string name, Body&& body) {
  Suite s;
  s.name = std::move(name);
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(s);
  } catch (const std::exception& e) {
    s.error = e.what();
  }
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

inline CMat random_complex(std::mt19937& rng, int n) {
  std::normal_distribution<double> N;
  CMat M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = cd(N(rng), N(rng));
  return M;
}

inline CVec random_point(std::mt19937& rng, int n, double radius) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  CVec z(n);
  for (int k = 0; k < n; ++k) z[k] = cd(U(rng), U(rng));
  return z * (radius / std::sqrt(2.0 * n));
}

inline RMat random_field(const GridShape& g, int n, std::mt19937& rng) {
  RMat Y(g.size(), n);
  for (int a = 0; a < n; ++a) Y.col(a) = random_smooth_function(g, rng);
  return Y;
}

inline double sup_diff(const RMat& a, const RMat& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Relative error against the reference with the scale floored at 1, so forms that vanish are
/// compared absolutely.
inline double rel_err_floor(const RMat& a, const RMat& ref) {
  return sup_diff(a, ref) / std::max(1.0, ref.cwiseAbs().maxCoeff());
}

inline double vol_j(const GridImmersion& imm) { return total_volumes(imm).volj; }

inline GridImmersion normal_displace(const GridImmersion& imm, const RMat& Y, double t) {
  return displace(imm, j_pushforward(imm, Y), t);
}

/// Core geodesic of the hyperbolic cylinder with Gauss curvature -1 (lambda = -1).
inline GridImmersion unit_core(int N, double ell = 2.0) { return core_geodesic(ell, 2.0, N); }

inline ContinuationProblem core_problem(int N, double eps, int steps) {
  auto core = unit_core(N);
  ContinuationProblem p;
  p.base = core;
  p.family = FormFamily(core.chart(), {}, {CylinderConformal{eps, 2.0}}, FormMode::RicciForm);
  p.steps = steps;
  return p;
}

inline FormFamily clifford_bump_family(double amp, double width) {
  CVec center(2);
  center << cd(0.4, 0.2), cd(-0.3, 0.1);
  return FormFamily(fubini_study(2), {GaussianBump{amp, center, width}}, {}, FormMode::KahlerForm);
}

}  // namespace detail

// ---- acceptance criteria ---------------------------------------------------

/// Pointwise identities on random Hermitian structures and frames.
inline Suite check_pointwise_identities(unsigned seed = 1, int trials = 1000) {
  return detail::run_suite("pointwise identities", [&](Suite& s) {
    std::mt19937 rng(seed);
    double rho_min = 1e300, rho_max = 0, proj = 0, det = 0, lag_worst = 0;
    int mismatch = 0;
    for (int k = 0; k < trials; ++k) {
      const int n = 1 + k % 3;
      CMat A = detail::random_complex(rng, n);
      HermitianStructure H{A * A.adjoint() + 0.5 * CMat::Identity(n, n)};
      CMat F = detail::random_complex(rng, n);
      double rho = rho_j(F, H);
      rho_min = std::min(rho_min, rho);
      rho_max = std::max(rho_max, rho);
      det = std::max(det, std::abs(rho * rho - riemannian_volume_of_ej(F, H)));
      auto P = projections(F);
      RMat I = RMat::Identity(2 * n, 2 * n), J = complex_structure(n);
      for (const RMat& r : {RMat(P.PL + P.PJ - I), RMat(P.PL * P.PJ), RMat(P.PL * P.PL - P.PL),
                            RMat(J * P.PL - P.PJ * J), RMat(J * P.PJ - P.PL * J)})
        proj = std::max(proj, r.cwiseAbs().maxCoeff());
      // an H-Lagrangian frame: (L^T)^{-1} R with H = L L^* and R real
      Eigen::LLT<CMat> llt(H.h);
      CMat P0 = CMat(llt.matrixL().transpose()).inverse();
      CMat lag = P0 * CMat(detail::random_complex(rng, n).real().cast<cd>());
      double rl = rho_j(lag, H), dl = lagrangian_defect(lag, H);
      lag_worst = std::max({lag_worst, std::abs(rl - 1.0), dl});
      // both directions of the equivalence on a generic and a Lagrangian frame
      for (auto [r, d] : {std::pair{rho, lagrangian_defect(F, H)}, std::pair{rl, dl}})
        if ((std::abs(r - 1.0) <= 1e-10) != (d <= 1e-10)) ++mismatch;
    }
    s.add(at_least("min rho_J (must be > 0)", rho_min, std::numeric_limits<double>::min()));
    s.add(at_most("max rho_J", rho_max, 1.0 + 1e-12));
    s.add(at_most("Lagrangian frames: max(|rho_J - 1|, defect)", lag_worst, 1e-10));
    s.add(at_most("rho_J = 1 <=> defect = 0 mismatches", mismatch, 0));
    s.add(at_most("projection identities residual", proj, 1e-10));
    s.add(at_most("|rho_J^2 - vol_g(e, Je)|", det, 1e-10));
  });
}

/// Einstein constants of the Fubini-Study and complex-ball charts at random points.
inline Suite check_einstein_constants(unsigned seed = 2, int points = 100) {
  return detail::run_suite("Einstein constants", [&](Suite& s) {
    std::mt19937 rng(seed);
    double fs = 0, ch = 0;
    for (int k = 0; k < points; ++k) {
      const int n = 1 + k % 3;
      CVec z = detail::random_point(rng, n, 0.9);
      fs = std::max(fs, einstein_defect(fubini_study(n), z));
      ch = std::max(ch, einstein_defect(complex_ball(n), z));
    }
    s.add(at_most("Fubini-Study sup|rho - (n+1) omega|", fs, 1e-8));
    s.add(at_most("complex ball sup|rho + (n+1) omega|", ch, 1e-8));
  });
}

/// Trace formula versus canonical-bundle oracle for xi_J.
inline Suite check_maslov_cross_oracle(int N = 64, int tori = 20, int N_tori = 128) {
  return detail::run_suite("Maslov cross-oracle", [&](Suite& s) {
    auto c = circle(share(flat_chart(1)), 1.5, N);
    s.add(at_most("circle rel err", detail::rel_err_floor(maslov_form(c).xi, maslov_form_oracle(c)), 1e-4));
    auto cl = clifford_torus(share(fubini_study(2)), N);
    s.add(at_most("Clifford torus rel err", detail::rel_err_floor(maslov_form(cl).xi, maslov_form_oracle(cl)), 1e-4));
    std::vector<ChartPtr> charts{share(flat_chart(2)), share(fubini_study(2)), share(complex_ball(2))};
    double worst = 0;
    for (int k = 0; k < tori; ++k) {
      auto imm = random_torus(charts[k % 3], N_tori, 1 + k, 0.35, 0.06);
      worst = std::max(worst, detail::rel_err_floor(maslov_form(imm).xi, maslov_form_oracle(imm)));
    }
    s.add(at_most("random tori worst rel err", worst, 1e-4));
  });
}

/// sup|d xi_J - iota^* rho| across resolutions on a fixed random torus in FS C^2.
inline Suite check_closedness_order(std::vector<int> resolutions = {32, 64, 128}) {
  return detail::run_suite("closedness d xi = iota* rho", [&](Suite& s) {
    auto chart = share(fubini_study(2));
    double prev = 0;
    int prev_n = 0;
    for (int N : resolutions) {
      double d = closedness_defect(random_torus(chart, N, 3));
      s.add(at_most("defect at " + std::to_string(N) + "^2", d, 1e-2));
      if (prev > 0) s.add(at_least("observed order " + std::to_string(prev_n) + "->" + std::to_string(N),
                                   std::log(prev / d) / std::log(double(N) / prev_n), 2.0));
      prev = d;
      prev_n = N;
    }
  });
}

/// First variation of Vol_J against a central difference.
inline Suite check_first_variation(unsigned seed = 3, int pairs = 10) {
  return detail::run_suite("first variation", [&](Suite& s) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0.3, 0.8);
    std::vector<ChartPtr> charts{share(fubini_study(2)), share(complex_ball(2))};
    double worst = 0;
    for (int k = 0; k < pairs; ++k) {
      GridImmersion imm = k % 3 == 0 ? circle(share(fubini_study(1)), U(rng), 64)
                                     : random_torus(charts[k % 2], 40, 10 + k, 0.35, 0.06);
      RMat Y = 0.2 * detail::random_field(imm.shape(), imm.n(), rng);
      // a round circle only sees the mean of Y
      if (imm.n() == 1) Y.array() += 0.3;
      const double t = 1e-4;
      double fd = (detail::vol_j(detail::normal_displace(imm, Y, t)) - detail::vol_j(detail::normal_displace(imm, Y, -t))) /
                  (2 * t);
      worst = std::max(worst, std::abs(first_variation(imm, Y) - fd) / std::abs(fd));
    }
    s.add(at_most("worst rel err", worst, 1e-5));
  });
}

/// Linearisation of xi_J at the hyperbolic core geodesic and its vertical kernel.
inline Suite check_dmaslov(unsigned seed = 4, int N = 129) {
  return detail::run_suite("linearised Maslov form", [&](Suite& s) {
    auto core = detail::unit_core(N);
    std::mt19937 rng(seed);
    RMat Y = 0.1 * detail::random_field(core.shape(), 1, rng);
    auto V = j_pushforward(core, Y);
    const double t = 1e-4;
    RMat fd = (maslov_form(ambient_displace(core, V, t)).xi - maslov_form(ambient_displace(core, V, -t)).xi) / (2 * t);
    RMat an = d_maslov(core, Y);
    s.add(at_most("normal direction rel err", detail::sup_diff(an, fd) / fd.cwiseAbs().maxCoeff(), 1e-3));
    RMat X = detail::random_field(core.shape(), 1, rng);
    std::vector<CVec> v(core.size());
    for (int i = 0; i < core.size(); ++i) v[i] = core.tangent_frame(i) * RVec(X.row(i).transpose()).cast<cd>();
    RMat tan = (maslov_form(displace(core, v, t)).xi - maslov_form(displace(core, v, -t)).xi) / (2 * t);
    s.add(at_most("tangential direction sup|D xi|", tan.cwiseAbs().maxCoeff(), 1e-6));
  });
}

/// L~ on the core geodesic: Kahler-Einstein form, closed-form spectrum, positivity.
inline Suite check_ltilde_core(unsigned seed = 5, int N = 129, double ell = 2.0) {
  return detail::run_suite("L~ at the core geodesic", [&](Suite& s) {
    auto core = detail::unit_core(N, ell);
    auto op = operator_Ltilde(core);
    IntrinsicCalculus ic(core);
    const double lambda = *core.chart().einstein_constant();
    std::mt19937 rng(seed);
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
      RVec f = random_smooth_function(core.shape(), rng);
      RVec expect = -ic.laplacian(f) / lambda + f;
      worst = std::max(worst, detail::sup_diff(op.apply(f), expect) / expect.cwiseAbs().maxCoeff());
    }
    s.add(at_most("L~ vs -Delta/lambda + Id rel err (20 fields)", worst, 1e-8));
    const int kmax = 8;
    RVec ev = spectrum(op, 2 * kmax);
    double spec = 0;
    for (int j = 0; j < 2 * kmax; ++j) {
      int k = 1 + j / 2;
      double expect = 1.0 + std::pow(2 * M_PI * k / ell, 2) / std::abs(lambda);
      spec = std::max(spec, std::abs(ev[j] - expect) / expect);
    }
    s.add(at_most("spectrum rel err, k <= 8", spec, 1e-4));
    s.add(at_least("min eigenvalue", ev.minCoeff(), 1.0 - 1e-3));
  });
}

/// Second variation at critical points against the second central difference.
inline Suite check_second_variation(unsigned seed = 6) {
  return detail::run_suite("second variation at critical points", [&](Suite& s) {
    std::mt19937 rng(seed);
    auto fd2 = [](const GridImmersion& imm, const RMat& Y, double t) {
      return (detail::vol_j(detail::normal_displace(imm, Y, t)) - 2 * detail::vol_j(imm) +
              detail::vol_j(detail::normal_displace(imm, Y, -t))) /
             (t * t);
    };
    auto core = detail::unit_core(129);
    RMat Y = 0.1 * detail::random_field(core.shape(), 1, rng);
    double an = second_variation_at_critical(core, Y), fd = fd2(core, Y, 1e-3);
    s.add(at_most("core geodesic rel err", std::abs(an - fd) / std::abs(fd), 1e-3));
    auto cl = clifford_torus(share(fubini_study(2)), 32);
    RMat Z = 0.1 * detail::random_field(cl.shape(), 2, rng);
    an = second_variation_at_critical(cl, Z);
    fd = fd2(cl, Z, 1e-3);
    s.add(at_most("Clifford torus rel err", std::abs(an - fd) / std::abs(fd), 1e-3));
    double smallest = 1e300;
    for (int k = 0; k < 20; ++k) {
      RMat W = detail::random_field(core.shape(), 1, rng);
      smallest = std::min(smallest, second_variation_at_critical(core, W) / W.squaredNorm());
    }
    s.add(at_least("core geodesic min Q(Y)/|Y|^2 over 20 fields (must be > 0)", smallest,
                   std::numeric_limits<double>::min()));
  });
}

/// Moser transport keeps the Clifford torus Lagrangian; RK4 order under halving dt.
inline Suite check_moser_transport(int N = 64, int steps = 100) {
  return detail::run_suite("Moser transport", [&](Suite& s) {
    auto cl = clifford_torus(share(fubini_study(2)), N);
    auto fam = detail::clifford_bump_family(0.3, 2.0);
    double dc = moser_flow(cl, fam, 1.0, steps, false).defects.back();
    double df = moser_flow(cl, fam, 1.0, 2 * steps, false).defects.back();
    s.add(at_most("final defect sup|iota_t^* omega_t|", dc, 1e-6));
    s.add(at_least("halving dt improvement", dc / df, 14.0));
  });
}

/// Continuation of the core geodesic under a conformal perturbation, with a round trip.
inline Suite check_core_persistence(int N = 129, double eps = 0.1, int steps = 10) {
  return detail::run_suite("core geodesic continuation", [&](Suite& s) {
    auto p = detail::core_problem(N, eps, steps);
    auto fwd = continuation(p);
    int certified = 0;
    double sup_xi = 0, worst_ratio = 0;
    size_t n_ratios = 0;
    for (const auto& st : fwd.steps) {
      certified += st.certified;
      sup_xi = std::max(sup_xi, st.newton.sup_xi);
      for (double q : st.newton.ratios) worst_ratio = std::max(worst_ratio, q);
      n_ratios += st.newton.ratios.size();
    }
    s.add(at_least("certified steps (of " + std::to_string(fwd.steps.size()) + ")", certified,
                   static_cast<double>(fwd.steps.size())));
    s.add(at_most("|1 - parameter reached|", std::abs(1.0 - fwd.t), 1e-12));
    s.add(at_most("max certified sup|xi_J|", sup_xi, 1e-8));
    s.add(at_least("quadratic ratios observed", static_cast<double>(n_ratios), 1));
    s.add(at_most("max r_{k+1}/r_k^2", worst_ratio, 10.0));
    auto back = continuation(p, 1.0, 0.0, fwd.f);
    s.add(at_most("round trip |f|", back.f.cwiseAbs().maxCoeff(), 1e-8));
  });
}

/// Quadratic remainder scaling and the Newton basin at the continued solution.
inline Suite check_uniqueness(int N = 129, int trials = 100, unsigned seed = 1) {
  return detail::run_suite("quantitative uniqueness", [&](Suite& s) {
    auto sol = continuation(detail::core_problem(N, 0.1, 4)).immersion;
    UniquenessOptions o;
    o.trials = trials;
    o.seed = seed;
    auto rep = uniqueness_probe(sol, o);
    double lo = 1e300, hi = 0;
    for (double r : rep.scaling_ratios) lo = std::min(lo, r), hi = std::max(hi, r);
    s.add(at_least("min scaling ratio", lo, 3.5));
    s.add(at_most("max scaling ratio", hi, 4.5));
    s.add(at_least("converged starts (of " + std::to_string(rep.trials) + ")", rep.converged, rep.trials));
    s.add(at_least("certified radius (must be > 0)", rep.radius, std::numeric_limits<double>::min()));
  });
}

/// Loop integrals of xi_J are unchanged by exact perturbations at a critical point.
inline Suite check_exact_perturbations(unsigned seed = 7, int count = 20) {
  return detail::run_suite("periods under exact perturbations", [&](Suite& s) {
    std::mt19937 rng(seed);
    auto run = [&](const GridImmersion& base, double amp) {
      IntrinsicCalculus ic(base);
      RVec before = loop_integrals(base, maslov_form(base).xi);
      double worst = 0;
      for (int k = 0; k < count; ++k) {
        RMat alpha = ic.d(random_smooth_function(base.shape(), rng));
        alpha *= amp / alpha.cwiseAbs().maxCoeff();
        auto moved = weinstein_immersion(base, alpha);
        worst = std::max(worst, (loop_integrals(moved, maslov_form(moved).xi) - before).cwiseAbs().maxCoeff());
      }
      return worst;
    };
    s.add(at_most("Clifford torus in CP^2, sup|df| = 1e-3", run(clifford_torus(share(fubini_study(2)), 32), 1e-3), 1e-6));
    s.add(at_most("core geodesic, sup|df| = 5e-2", run(detail::unit_core(257), 5e-2), 1e-6));
  });
}

// ---- per-module suites ------------------------------------------------------

inline Suite check_immersion_basics() {
  return detail::run_suite("immersion basics", [&](Suite& s) {
    auto fs = share(fubini_study(2));
    auto cl = clifford_torus(fs, 32);
    s.add(at_most("Clifford omega pullback", sup_norm(pullback_kahler_form(cl)), 1e-8));
    s.add(at_most("Clifford rho pullback", sup_norm(pullback_ricci_form(cl)), 1e-8));
    auto c = circle(share(flat_chart(1)), 1.0, 64);
    double tan = 0;
    for (int i = 0; i < c.size(); ++i) {
      cd expect = cd(0, 1) * c.point(i)[0];
      tan = std::max(tan, std::abs(c.tangent_frame(i)(0, 0) - expect));
    }
    s.add(at_most("circle tangent rel err", tan, 1e-6));
    auto tor = random_torus(fs, 16, 4);
    std::stringstream ss;
    write_csv(tor, ss);
    auto back = read_csv(fs, ss);
    double rt = 0;
    for (int i = 0; i < tor.size(); ++i) rt = std::max(rt, (back.point(i) - tor.point(i)).norm());
    s.add(at_most("CSV round trip", rt, 0.0));
  });
}

inline Suite check_curvature_signs() {
  return detail::run_suite("curvature signs", [&](Suite& s) {
    double worst = 0;
    for (double c : {1.0, 2.0})
      for (cd z : {cd(0.3, 0.7), cd(-1.1, 2.0)})
        worst = std::max(worst, std::abs(gauss_curvature(upper_half_plane(c), CVec::Constant(1, z)) + 2.0 / c));
    s.add(at_most("half-plane Gauss curvature vs -2/c", worst, 1e-6));
  });
}

inline Suite check_circle_maslov() {
  return detail::run_suite("circle Maslov class", [&](Suite& s) {
    auto c = circle(share(flat_chart(1)), 1.5, 64);
    auto m = maslov_form(c);
    s.add(at_most("|loop integral + 2 pi|", std::abs(loop_integrals(c, m.xi)[0] + 2 * M_PI), 1e-7));
    auto cl = clifford_torus(share(fubini_study(2)), 64);
    s.add(at_most("Clifford torus sup|xi_J|", maslov_form(cl).sup_norm, 1e-6));
  });
}

inline Suite check_moser_solve() {
  return detail::run_suite("Moser vector field solve", [&](Suite& s) {
    // phi = -2y on flat C: alpha_dot = dx, and form(X, .) = -alpha_dot gives X = +d_y
    FormFamily fam(flat_chart(1), {MonomialTerm{1.0, cd(0, 2), {1}, {0}}}, {}, FormMode::KahlerForm);
    CVec X = moser_vector_field(fam, 0.3, CVec::Constant(1, cd(0.7, -0.3)));
    s.add(at_most("flat 2x2 solve |X - d_y|", std::abs(X[0] - cd(0, 1)), 1e-14));
    auto bump = detail::clifford_bump_family(0.1, 1.2);
    std::mt19937 rng(3);
    double res = 0;
    for (int k = 0; k < 20; ++k) {
      CVec z = detail::random_point(rng, 2, 0.8);
      RVec r = bump.form(0.5, z).transpose() * to_real(moser_vector_field(bump, 0.5, z)) + bump.alpha_dot(0.5, z);
      res = std::max(res, r.cwiseAbs().maxCoeff());
    }
    s.add(at_most("linear solve residual", res, 1e-12));
  });
}

/// Acceptance criteria in order.
inline std::vector<std::function<Suite()>> acceptance_criteria() {
  return {[] { return check_pointwise_identities(); }, [] { return check_einstein_constants(); },
          [] { return check_maslov_cross_oracle(); },  [] { return check_closedness_order(); },
          [] { return check_first_variation(); },      [] { return check_dmaslov(); },
          [] { return check_ltilde_core(); },          [] { return check_second_variation(); },
          [] { return check_moser_transport(); },      [] { return check_core_persistence(); },
          [] { return check_uniqueness(); },           [] { return check_exact_perturbations(); }};
}

inline const std::vector<std::string>& module_names() {
  static const std::vector<std::string> names{"trlinalg", "kahler", "immersion", "maslov",
                                              "linearize", "isotopy", "persist"};
  return names;
}

/// Suites for one module; an unknown name yields an empty list.
inline std::vector<Suite> validate_module(const std::string& name) {
  if (name == "trlinalg") return {check_pointwise_identities()};
  if (name == "kahler") return {check_einstein_constants(), check_curvature_signs()};
  if (name == "immersion") return {check_immersion_basics()};
  if (name == "maslov") return {check_circle_maslov(), check_maslov_cross_oracle(), check_closedness_order()};
  if (name == "linearize")
    return {check_first_variation(), check_dmaslov(), check_ltilde_core(), check_second_variation(),
            check_exact_perturbations()};
  if (name == "isotopy") return {check_moser_solve(), check_moser_transport()};
  if (name == "persist") return {check_core_persistence(), check_uniqueness()};
  return {};
}

inline std::string format_check(const Check& c) {
  std::ostringstream os;
  os.precision(3);
  os << (c.pass ? "  ok    " : "  FAIL  ") << c.name << ": " << std::scientific << c.value << (c.upper ? " <= " : " >= ")
     << c.bound;
  return os.str();
}

}  // namespace trgeom
