#pragma once

// Task runners behind the command line. Each writes its CSV artifacts into the output directory
// and returns the deterministic part of the summary plus the certificates.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "trgeom/scenario.hpp"
#include "trgeom/validate.hpp"

namespace trgeom::cli {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

struct TaskOutput {
  json results = json::object();
  std::vector<Check> certificates;
  json timings = json::object();
  std::vector<std::string> files;
};

class Stopwatch {
 public:
  double lap() {
    auto now = std::chrono::steady_clock::now();
    double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline json to_json(const RVec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json to_json(const Check& c) {
  return {{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"relation", c.upper ? "<=" : ">="}, {"pass", c.pass}};
}

inline std::ofstream open_csv(const fs::path& dir, const std::string& name, TaskOutput& out) {
  std::ofstream os(dir / name);
  if (!os) fail(ErrorKind::TaskError, "cannot write " + (dir / name).string());
  os.precision(17);
  out.files.push_back(name);
  return os;
}

inline double tol_or(const Scenario& s, double fallback) { return s.params.tol > 0 ? s.params.tol : fallback; }

// ---- validate -----------------------------------------------------------------

inline std::vector<Suite> run_suites(const std::string& target) {
  if (target == "all") {
    std::vector<Suite> all;
    for (const auto& m : module_names())
      for (auto& s : validate_module(m)) {
        s.name = m + ": " + s.name;
        all.push_back(std::move(s));
      }
    return all;
  }
  if (target == "acceptance") {
    std::vector<Suite> all;
    for (auto& crit : acceptance_criteria()) all.push_back(crit());
    return all;
  }
  auto suites = validate_module(target);
  if (suites.empty()) fail(ErrorKind::ConfigError, "unknown validation target '" + target + "'");
  return suites;
}

inline void task_validate(const Scenario& s, TaskOutput& out) {
  json arr = json::array();
  for (const auto& suite : run_suites(s.params.suite)) {
    json checks = json::array();
    for (const auto& c : suite.checks) {
      checks.push_back(to_json(c));
      Check cert = c;
      cert.name = suite.name + ": " + c.name;
      out.certificates.push_back(cert);
    }
    if (!suite.error.empty()) out.certificates.push_back(at_most(suite.name + ": aborted (" + suite.error + ")", 1, 0));
    arr.push_back({{"suite", suite.name}, {"pass", suite.pass()}, {"checks", checks}, {"error", suite.error}});
    out.timings[suite.name] = suite.seconds;
  }
  out.results["suites"] = arr;
}

// ---- maslov ---------------------------------------------------------------------

/// maslov.csv columns: node, i0..i{n-1}, re_z1, im_z1, ..., rho_j, xi_0..xi_{n-1}, hj_norm
inline void task_maslov(const Scenario& s, const fs::path& dir, TaskOutput& out) {
  Stopwatch sw;
  const auto& imm = *s.immersion;
  imm.require_valid();
  const int n = imm.n();
  auto m = maslov_form(imm);
  RVec norm = form_norm(imm, m.xi);
  out.timings["maslov_form"] = sw.lap();
  RMat oracle = maslov_form_oracle(imm);
  double oracle_err = detail::rel_err_floor(m.xi, oracle);
  out.timings["oracle"] = sw.lap();
  double closed = closedness_defect(imm, m.xi);
  out.timings["closedness"] = sw.lap();
  RVec loops = loop_integrals(imm, m.xi);
  auto vols = total_volumes(imm);

  auto os = open_csv(dir, "maslov.csv", out);
  os << "node";
  for (int a = 0; a < n; ++a) os << ",i" << a;
  for (int k = 0; k < n; ++k) os << ",re_z" << k + 1 << ",im_z" << k + 1;
  os << ",rho_j";
  for (int a = 0; a < n; ++a) os << ",xi_" << a;
  os << ",hj_norm\n";
  for (int i = 0; i < imm.size(); ++i) {
    os << i;
    for (int a = 0; a < n; ++a) os << "," << imm.shape().coord(i, a);
    for (int k = 0; k < n; ++k) os << "," << imm.point(i)[k].real() << "," << imm.point(i)[k].imag();
    os << "," << rho_j(imm.tangent_frame(i), imm.metric(i));
    for (int a = 0; a < n; ++a) os << "," << m.xi(i, a);
    os << "," << norm[i] << "\n";
  }

  out.results = {{"sup_xi", m.sup_norm},          {"loop_integrals", to_json(loops)}, {"closedness_defect", closed},
                 {"oracle_rel_err", oracle_err},  {"vol_g", vols.volg},               {"vol_j", vols.volj},
                 {"lagrangian_defect", sup_norm(pullback_kahler_form(imm))}};
  out.certificates.push_back(at_most("trace formula vs canonical-bundle oracle", oracle_err, s.params.oracle_tol));
  if (n >= 2) out.certificates.push_back(at_most("closedness defect", closed, s.params.closedness_tol));
  if (s.params.expect_critical) out.certificates.push_back(at_most("sup|xi_J|", m.sup_norm, tol_or(s, 1e-6)));
}

// ---- linearize ------------------------------------------------------------------

/// eigenvalues.csv: index, eigenvalue[, expected]; eigenvectors.csv: row, v0..v{k-1};
/// matrix.csv (optional): the assembled operator, one row per line.
inline void task_linearize(const Scenario& s, const fs::path& dir, bool dump_matrix, TaskOutput& out) {
  Stopwatch sw;
  const auto& imm = *s.immersion;
  const bool scalar = s.params.op == "ltilde";
  auto Lt = operator_Ltilde(imm);
  auto op = scalar ? Lt : operator_L(imm);
  op.assemble();
  out.timings["assemble"] = sw.lap();
  auto ep = eigenpairs(op, s.params.eigenpairs);
  out.timings["eigensolve"] = sw.lap();
  auto ric = ricci_endomorphism(imm);

  // weighted symmetry of the assembled matrix
  RMat M = *op.matrix;
  RMat W = op.weight.asDiagonal() * M;
  double sym = (W - W.transpose()).cwiseAbs().maxCoeff() / W.cwiseAbs().maxCoeff();
  out.certificates.push_back(at_most("weighted self-adjointness", sym, 1e-8));

  std::mt19937 rng(s.seed);
  IntrinsicCalculus ic(imm);
  RVec f = random_smooth_function(imm.shape(), rng);
  auto L = operator_L(imm);
  RVec lhs = L.apply(flatten(ic.d(f))), rhs = flatten(ic.d(Lt.apply(f)));
  double consistency = (lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff();
  out.certificates.push_back(at_most("L(df) = d(L~ f)", consistency, 1e-8));
  out.results["intertwining_residual"] = consistency;
  out.results["weighted_asymmetry"] = sym;
  out.results["ricci_sign"] = ric.sign;

  if (auto lambda = imm.chart().einstein_constant()) {
    RVec expect = -ic.laplacian(f) / *lambda + f;
    double ke = (Lt.apply(f) - expect).cwiseAbs().maxCoeff() / expect.cwiseAbs().maxCoeff();
    out.results["kahler_einstein_residual"] = ke;
    out.certificates.push_back(at_most("L~ = -Delta/lambda + Id", ke, 1e-8));
  }

  RVec expected;
  if (s.params.closed_form) {
    // closed geodesic of g-length len in a surface with lambda = -2/c
    auto lambda = imm.chart().einstein_constant();
    if (!scalar || !lambda || imm.n() != 1 || imm.chart().decks().empty())
      fail(ErrorKind::TaskError, "closed_form needs operator = ltilde on the core geodesic of a hyperbolic cylinder");
    double len = total_volumes(imm).volg;
    expected.resize(ep.values.size());
    for (int j = 0; j < expected.size(); ++j) expected[j] = 1.0 + std::pow(2 * M_PI * (1 + j / 2) / len, 2) / std::abs(*lambda);
    double err = ((ep.values - expected).array() / expected.array()).abs().maxCoeff();
    out.results["closed_form_rel_err"] = err;
    out.certificates.push_back(at_most("spectrum vs closed form", err, tol_or(s, 1e-4)));
  }
  out.results["eigenvalues"] = to_json(ep.values);
  out.results["min_eigenvalue"] = ep.values.minCoeff();
  if (ric.sign < 0 && scalar) out.certificates.push_back(at_least("min eigenvalue", ep.values.minCoeff(), 1.0 - 1e-3));

  auto ev = open_csv(dir, "eigenvalues.csv", out);
  ev << "index,eigenvalue" << (expected.size() ? ",expected" : "") << "\n";
  for (int j = 0; j < ep.values.size(); ++j) {
    ev << j << "," << ep.values[j];
    if (expected.size()) ev << "," << expected[j];
    ev << "\n";
  }
  auto vec = open_csv(dir, "eigenvectors.csv", out);
  vec << "row";
  for (int j = 0; j < ep.vectors.cols(); ++j) vec << ",v" << j;
  vec << "\n";
  for (int r = 0; r < ep.vectors.rows(); ++r) {
    vec << r;
    for (int j = 0; j < ep.vectors.cols(); ++j) vec << "," << ep.vectors(r, j);
    vec << "\n";
  }
  if (dump_matrix) {
    auto mat = open_csv(dir, "matrix.csv", out);
    for (int r = 0; r < M.rows(); ++r) {
      for (int c = 0; c < M.cols(); ++c) mat << (c ? "," : "") << M(r, c);
      mat << "\n";
    }
  }
  out.timings["report"] = sw.lap();
}

// ---- moser ----------------------------------------------------------------------

/// moser_steps.csv: step, t, defect; final_immersion.csv in the immersion CSV format.
inline void task_moser(const Scenario& s, const fs::path& dir, TaskOutput& out) {
  Stopwatch sw;
  const auto& imm = *s.immersion;
  auto res = moser_flow(imm, *s.family, 0.0, s.params.t_end, s.params.steps, true);
  out.timings["flow"] = sw.lap();
  auto steps = open_csv(dir, "moser_steps.csv", out);
  steps << "step,t,defect\n";
  for (size_t k = 0; k < res.times.size(); ++k) steps << k << "," << res.times[k] << "," << res.defects[k] << "\n";
  auto fin = open_csv(dir, "final_immersion.csv", out);
  write_csv(res.immersion, fin);

  double moved = 0;
  for (int i = 0; i < imm.size(); ++i) moved = std::max(moved, (res.immersion.point(i) - imm.point(i)).norm());
  double worst = *std::max_element(res.defects.begin(), res.defects.end());
  out.results = {{"final_defect", res.defects.back()}, {"max_defect", worst}, {"max_displacement", moved},
                 {"steps", s.params.steps},            {"t_end", s.params.t_end}};
  out.certificates.push_back(at_most("max defect along the flow", worst, tol_or(s, 1e-6)));
  if (s.params.refine) {
    double fine = moser_flow(imm, *s.family, 0.0, s.params.t_end, 2 * s.params.steps, false).defects.back();
    out.timings["refined_flow"] = sw.lap();
    out.results["refined_final_defect"] = fine;
    if (imm.n() >= 2) {
      double ratio = res.defects.back() / fine;
      out.results["halving_ratio"] = ratio;
      out.certificates.push_back(at_least("halving dt improvement", ratio, 14.0));
    }
  }
}

// ---- persist --------------------------------------------------------------------

inline json to_json(const NewtonReport& r) {
  return {{"converged", r.converged},           {"iterations", r.iterations},
          {"residuals", r.residuals},           {"ratios", r.ratios},
          {"sup_xi", r.sup_xi},                 {"lagrangian_defect", r.lagrangian_defect},
          {"max_period", r.max_period},         {"kernel_residual", r.kernel_residual}};
}

/// persist_steps.csv: step, t, iterations, sup_xi, base_period, certified;
/// final_immersion.csv in the immersion CSV format.
inline void task_persist(const Scenario& s, const fs::path& dir, TaskOutput& out) {
  Stopwatch sw;
  const auto& imm = *s.immersion;
  if (imm.n() >= 2 && !s.experimental_nd)
    fail(ErrorKind::TaskError, "continuation for n >= 2 uses the first-order chart; pass --experimental-nd to run it");
  ContinuationProblem p;
  p.base = imm;
  p.family = *s.family;
  p.steps = s.params.steps;
  p.newton.certify_tol = tol_or(s, p.newton.certify_tol);
  p.newton.tol = std::min(p.newton.tol, p.newton.certify_tol);
  p.newton.jacobian = s.params.jacobian;
  p.newton.map.chart = s.params.chart;
  if (s.params.kernel_isometry) {
    // Jacobi fields of ambient isometries: the null modes of L~ at the base
    auto op = operator_Ltilde(imm);
    auto ep = eigenpairs(op, 2 * imm.n() + 4);
    for (int j = 0; j < ep.values.size(); ++j)
      if (std::abs(ep.values[j]) < 1e-6) p.newton.kernel.push_back(ep.vectors.col(j));
    out.results["kernel_dimension"] = p.newton.kernel.size();
  }
  auto rep = continuation(p, 0.0, s.params.t_end);
  out.timings["continuation"] = sw.lap();

  json steps = json::array();
  auto csv = open_csv(dir, "persist_steps.csv", out);
  csv << "step,t,iterations,sup_xi,base_period,certified\n";
  int certified = 0;
  for (size_t k = 0; k < rep.steps.size(); ++k) {
    const auto& st = rep.steps[k];
    certified += st.certified;
    steps.push_back({{"t", st.t}, {"base_period", st.base_period}, {"certified", st.certified}, {"newton", to_json(st.newton)}});
    csv << k << "," << st.t << "," << st.newton.iterations << "," << st.newton.sup_xi << "," << st.base_period << ","
        << st.certified << "\n";
  }
  auto fin = open_csv(dir, "final_immersion.csv", out);
  write_csv(rep.immersion, fin);
  out.results["steps"] = steps;
  out.results["bisections"] = rep.bisections;
  out.results["t_reached"] = rep.t;
  out.results["final_f_sup"] = rep.f.cwiseAbs().maxCoeff();
  out.certificates.push_back(at_least("certified steps (of " + std::to_string(rep.steps.size()) + ")", certified,
                                      static_cast<double>(rep.steps.size())));
  const auto& last = rep.steps.back().newton;
  if (p.newton.kernel.empty()) {
    out.certificates.push_back(at_most("final sup|xi_J|", last.sup_xi, p.newton.certify_tol));
  } else {
    out.results["final_sup_xi"] = last.sup_xi;
    out.results["final_kernel_residual"] = last.kernel_residual;
    out.certificates.push_back(at_most("final projected residual", last.residuals.back(), p.newton.certify_tol));
  }

  if (s.params.round_trip) {
    auto back = continuation(p, s.params.t_end, 0.0, rep.f);
    out.timings["round_trip"] = sw.lap();
    double norm = back.f.cwiseAbs().maxCoeff();
    out.results["round_trip_f_sup"] = norm;
    out.certificates.push_back(at_most("round trip |f|", norm, 1e-8));
  }
  if (s.params.uniqueness) {
    UniquenessOptions o;
    o.trials = s.params.trials;
    o.seed = s.seed;
    o.newton = p.newton;
    auto u = uniqueness_probe(rep.immersion, o);
    out.timings["uniqueness"] = sw.lap();
    out.results["uniqueness"] = {{"c1", u.c1},
                                 {"c1_exact", u.c1_exact},
                                 {"c2", u.c2},
                                 {"radius", u.radius},
                                 {"probe_radius", u.probe_radius},
                                 {"scaling_ratios", u.scaling_ratios},
                                 {"trials", u.trials},
                                 {"converged", u.converged},
                                 {"worst_final_norm", u.worst_final_norm}};
    double lo = *std::min_element(u.scaling_ratios.begin(), u.scaling_ratios.end());
    double hi = *std::max_element(u.scaling_ratios.begin(), u.scaling_ratios.end());
    out.certificates.push_back(at_least("min scaling ratio", lo, 3.5));
    out.certificates.push_back(at_most("max scaling ratio", hi, 4.5));
    out.certificates.push_back(at_least("converged starts (of " + std::to_string(u.trials) + ")", u.converged, u.trials));
  }
}

// ---- driver ---------------------------------------------------------------------

struct RunResult {
  json summary;
  json timings;
  bool pass = false;
};

/// Runs the scenario and writes summary.json, timings.json and the task CSVs into dir.
/// Module errors are rethrown as TaskError after the summary (with any partial results) has been written.
inline RunResult run_scenario(const Scenario& s, const fs::path& dir, bool dump_matrix = false) {
  fs::create_directories(dir);
  auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  r.summary = {{"schema_version", kSchemaVersion},
               {"scenario", s.name},
               {"task", std::string(to_string(s.task))},
               {"convention_hash", convention_hash()},
               {"seed", s.seed}};
  if (s.immersion) {
    r.summary["chart"] = s.chart_spec;
    r.summary["immersion"] = s.immersion_spec;
    r.summary["resolution"] = s.resolution;
  }
  TaskOutput out;
  std::string error;
  try {
    switch (s.task) {
      case Task::Validate: task_validate(s, out); break;
      case Task::Maslov: task_maslov(s, dir, out); break;
      case Task::Linearize: task_linearize(s, dir, dump_matrix || s.params.dump_matrix, out); break;
      case Task::Moser: task_moser(s, dir, out); break;
      case Task::Persist: task_persist(s, dir, out); break;
    }
  } catch (const Error& e) {
    error = std::string(to_string(s.task)) + ": " + e.what();
  }
  json certs = json::array();
  bool pass = error.empty() && !out.certificates.empty();
  for (const auto& c : out.certificates) {
    certs.push_back(to_json(c));
    pass = pass && c.pass;
  }
  r.summary["results"] = out.results;
  r.summary["certificates"] = certs;
  r.summary["files"] = out.files;
  r.summary["pass"] = pass;
  if (!error.empty()) r.summary["error"] = error;
  r.timings = out.timings;
  r.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = pass;
  std::ofstream(dir / "summary.json") << r.summary.dump(2) << "\n";
  std::ofstream(dir / "timings.json") << r.timings.dump(2) << "\n";
  if (!error.empty()) fail(ErrorKind::TaskError, error);
  return r;
}

}  // namespace trgeom::cli
