#pragma once

// Scenario configs: sectioned key = value files naming a chart, an immersion family, an
// optional form family and a task with its parameters.
//
//   [scenario]  name, task (validate | maslov | linearize | moser | persist), seed
//   [chart]     type (flat | fubini_study | complex_ball | upper_half_plane | hyperbolic_cylinder), n, c, ell
//   [immersion] family (circle | clifford | linear-torus | random-torus | core-geodesic | csv), resolution, ...
//   [perturbation] mode (kahler-form | ricci-form), bump.*, conformal.*
//   [task]      task parameters, see TaskParams
//
// Unknown keys, missing keys and unparsable values raise ConfigError naming the key.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "isotopy.hpp"
#include "persist.hpp"

namespace trgeom {

enum class Task { Validate, Maslov, Linearize, Moser, Persist };

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::Validate: return "validate";
    case Task::Maslov: return "maslov";
    case Task::Linearize: return "linearize";
    case Task::Moser: return "moser";
    case Task::Persist: return "persist";
  }
  return "?";
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string convention_hash() {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a(kConventionRecord);
  return os.str();
}

/// Typed view of a parsed config that remembers which keys were read.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& origin = "<config>") {
    Config c;
    c.origin_ = origin;
    try {
      boost::property_tree::ini_parser::read_ini(is, c.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(ErrorKind::ConfigError, origin + " line " + std::to_string(e.line()) + ": " + e.message());
    }
    return c;
  }
  static Config load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::ConfigError, "cannot open " + path.string());
    return parse(is, path.string());
  }

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(path(key)).has_value(); }

  std::string raw(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(path(key));
    if (!v) fail(ErrorKind::ConfigError, origin_ + ": missing key '" + key + "'");
    used_.insert(key);
    return trim(*v);
  }

  template <class T>
  T get(const std::string& key) const {
    std::string v = raw(key);
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "yes" || v == "1") return true;
      if (v == "false" || v == "no" || v == "0") return false;
      bad(key, v, "boolean");
    } else {
      std::istringstream is(v);
      T out{};
      is >> out;
      if (is.fail() || !(is >> std::ws).eof()) bad(key, v, std::is_integral_v<T> ? "integer" : "number");
      return out;
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  /// Space-separated complex numbers written as re,im (or re).
  CVec complex_list(const std::string& key) const {
    std::istringstream is(raw(key));
    std::vector<cd> out;
    for (std::string tok; is >> tok;) {
      auto comma = tok.find(',');
      try {
        double re = std::stod(tok.substr(0, comma));
        double im = comma == std::string::npos ? 0.0 : std::stod(tok.substr(comma + 1));
        out.emplace_back(re, im);
      } catch (const std::exception&) {
        bad(key, tok, "complex number re,im");
      }
    }
    return Eigen::Map<CVec>(out.data(), static_cast<Eigen::Index>(out.size()));
  }

  /// Fails on keys that were never read.
  void reject_unused() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty())
        fail(ErrorKind::ConfigError, origin_ + ": key '" + section + "' outside any section");
      for (const auto& kv : body) {
        std::string key = section + "." + kv.first;
        if (!used_.count(key)) fail(ErrorKind::ConfigError, origin_ + ": unknown key '" + key + "'");
      }
    }
  }

  const std::string& origin() const { return origin_; }

 private:
  // section.key where the key itself may contain dots
  static boost::property_tree::ptree::path_type path(std::string key) {
    if (auto d = key.find('.'); d != std::string::npos) key[d] = '/';
    return {key, '/'};
  }
  static std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t"), b = s.find_last_not_of(" \t");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
  }
  [[noreturn]] void bad(const std::string& key, const std::string& v, const char* what) const {
    fail(ErrorKind::ConfigError, origin_ + ": key '" + key + "': cannot parse '" + v + "' as " + what);
  }

  std::string origin_;
  boost::property_tree::ptree tree_;
  mutable std::set<std::string> used_;
};

/// Overrides from the command line; unset fields keep the config values.
struct Overrides {
  std::optional<int> resolution;
  std::optional<double> tol;
  std::optional<unsigned> seed;
  bool experimental_nd = false;
};

struct TaskParams {
  double tol = 0;  // task certificate tolerance; 0 picks the task default
  // validate
  std::string suite = "all";
  // maslov
  bool expect_critical = false;
  double oracle_tol = 1e-4;
  double closedness_tol = 1e-3;
  // linearize
  std::string op = "ltilde";  // ltilde | l
  int eigenpairs = 8;
  bool dump_matrix = false;
  bool closed_form = false;  // compare with the core-geodesic spectrum
  // moser and persist
  double t_end = 1.0;
  int steps = 10;
  bool refine = false;  // moser: rerun with half the step and report the ratio
  // persist
  bool round_trip = false;
  bool uniqueness = false;
  int trials = 100;
  bool kernel_isometry = false;
  JacobianChoice jacobian = JacobianChoice::Current;
  WeinsteinChart chart = WeinsteinChart::Auto;
};

struct Scenario {
  std::string name;
  Task task = Task::Validate;
  unsigned seed = 1;
  int resolution = 0;
  std::string chart_spec, immersion_spec;
  ChartPtr chart;
  std::optional<GridImmersion> immersion;
  std::optional<FormFamily> family;
  TaskParams params;
  bool experimental_nd = false;
};

namespace detail {

template <class E>
E choose(const Config& c, const std::string& key, std::initializer_list<std::pair<const char*, E>> options) {
  std::string v = c.get<std::string>(key);
  std::string names;
  for (const auto& [name, value] : options) {
    if (v == name) return value;
    names += std::string(names.empty() ? "" : ", ") + name;
  }
  fail(ErrorKind::ConfigError, c.origin() + ": key '" + key + "': '" + v + "' is not one of " + names);
}

inline KahlerChart build_chart(const Config& c, std::string& spec) {
  enum Kind { Flat, FS, Ball, UHP, Cyl };
  Kind k = choose<Kind>(c, "chart.type", {{"flat", Flat}, {"fubini_study", FS}, {"complex_ball", Ball},
                                          {"upper_half_plane", UHP}, {"hyperbolic_cylinder", Cyl}});
  int n = c.get<int>("chart.n", 1);
  double scale = c.get<double>("chart.c", 1.0);
  if (n < 1 || n > 3) fail(ErrorKind::ConfigError, c.origin() + ": key 'chart.n': must be 1, 2 or 3");
  if (!(scale > 0)) fail(ErrorKind::ConfigError, c.origin() + ": key 'chart.c': must be positive");
  std::ostringstream os;
  os.precision(17);
  os << c.get<std::string>("chart.type") << " n=" << n << " c=" << scale;
  KahlerChart out = flat_chart(n);
  switch (k) {
    case Flat: break;
    case FS: out = fubini_study(n, scale); break;
    case Ball: out = complex_ball(n, scale); break;
    case UHP:
    case Cyl:
      if (n != 1) fail(ErrorKind::ConfigError, c.origin() + ": key 'chart.n': half-plane charts have n = 1");
      if (k == UHP) {
        out = upper_half_plane(scale);
      } else {
        double ell = c.get<double>("chart.ell");
        os << " ell=" << ell;
        out = hyperbolic_cylinder(ell, scale);
      }
      break;
  }
  spec = os.str();
  return out;
}

inline CMat parse_matrix(const Config& c, const std::string& key, int n) {
  std::string text = c.get<std::string>(key);
  CMat V(n, n);
  std::istringstream rows(text);
  int r = 0;
  for (std::string row; std::getline(rows, row, ';'); ++r) {
    if (r >= n) fail(ErrorKind::ConfigError, c.origin() + ": key '" + key + "': expected " + std::to_string(n) + " rows");
    std::istringstream is(row);
    int col = 0;
    for (std::string tok; is >> tok; ++col) {
      if (col >= n) fail(ErrorKind::ConfigError, c.origin() + ": key '" + key + "': row " + std::to_string(r) + " too long");
      auto comma = tok.find(',');
      try {
        V(r, col) = cd(std::stod(tok.substr(0, comma)), comma == std::string::npos ? 0.0 : std::stod(tok.substr(comma + 1)));
      } catch (const std::exception&) {
        fail(ErrorKind::ConfigError, c.origin() + ": key '" + key + "': cannot parse '" + tok + "'");
      }
    }
    if (col != n) fail(ErrorKind::ConfigError, c.origin() + ": key '" + key + "': row " + std::to_string(r) + " needs " + std::to_string(n) + " entries");
  }
  if (r != n) fail(ErrorKind::ConfigError, c.origin() + ": key '" + key + "': expected " + std::to_string(n) + " rows");
  return V;
}

inline GridImmersion build_immersion(const Config& c, const ChartPtr& chart, int N, const std::filesystem::path& dir,
                                     std::string& spec) {
  enum Fam { Circle, Clifford, Linear, Random, Core, Csv };
  Fam f = choose<Fam>(c, "immersion.family", {{"circle", Circle}, {"clifford", Clifford}, {"linear-torus", Linear},
                                              {"random-torus", Random}, {"core-geodesic", Core}, {"csv", Csv}});
  std::ostringstream os;
  os.precision(17);
  os << c.get<std::string>("immersion.family") << " N=" << N;
  const int n = chart->n();
  switch (f) {
    case Circle: {
      if (n != 1) fail(ErrorKind::ConfigError, c.origin() + ": key 'immersion.family': circle needs n = 1");
      double r = c.get<double>("immersion.radius", 1.0);
      cd center = c.has("immersion.center") ? c.complex_list("immersion.center")[0] : cd(0);
      os << " r=" << r << " center=" << center;
      spec = os.str();
      return circle(chart, r, N, center);
    }
    case Clifford: {
      double r = c.get<double>("immersion.radius", 1.0);
      os << " r=" << r;
      spec = os.str();
      return clifford_torus(chart, N, r);
    }
    case Linear: {
      CMat V = parse_matrix(c, "immersion.matrix", n);
      os << " V=" << V.format(Eigen::IOFormat(17, Eigen::DontAlignCols, ",", ";"));
      spec = os.str();
      return linear_torus(*chart, V, N);
    }
    case Random: {
      unsigned s = c.get<unsigned>("immersion.seed", 1u);
      double r = c.get<double>("immersion.radius", 0.5), amp = c.get<double>("immersion.amp", 0.08);
      int modes = c.get<int>("immersion.max_mode", 2);
      os << " seed=" << s << " r=" << r << " amp=" << amp << " max_mode=" << modes;
      spec = os.str();
      return random_torus(chart, N, s, r, amp, modes);
    }
    case Core: {
      if (chart->decks().empty())
        fail(ErrorKind::ConfigError, c.origin() + ": key 'immersion.family': core-geodesic needs chart.type = hyperbolic_cylinder");
      spec = os.str();
      // the chart carries ell and c; rebuild with the same parameters to share the deck
      GridImmersion core = core_geodesic(c.get<double>("chart.ell"), c.get<double>("chart.c", 1.0), N);
      return core.with_chart(chart);
    }
    case Csv: {
      auto file = std::filesystem::path(c.get<std::string>("immersion.file"));
      if (file.is_relative()) file = dir / file;
      std::ifstream is(file);
      if (!is) fail(ErrorKind::ConfigError, c.origin() + ": key 'immersion.file': cannot open " + file.string());
      os << " file=" << file.filename().string();
      spec = os.str();
      return read_csv(chart, is);
    }
  }
  fail(ErrorKind::ConfigError, "unreachable");
}

inline std::optional<FormFamily> build_family(const Config& c, const KahlerChart& chart) {
  if (!c.has("perturbation.mode")) return std::nullopt;
  FormMode mode = choose<FormMode>(c, "perturbation.mode", {{"kahler-form", FormMode::KahlerForm}, {"ricci-form", FormMode::RicciForm}});
  std::vector<Perturbation> perts;
  std::vector<Conformal> confs;
  if (c.has("perturbation.bump.amp")) {
    GaussianBump b;
    b.amp = c.get<double>("perturbation.bump.amp");
    b.width = c.get<double>("perturbation.bump.width", 1.0);
    b.center = c.has("perturbation.bump.center") ? c.complex_list("perturbation.bump.center") : CVec::Zero(chart.n());
    if (b.center.size() != chart.n())
      fail(ErrorKind::ConfigError, c.origin() + ": key 'perturbation.bump.center': needs " + std::to_string(chart.n()) + " entries");
    perts.push_back(b);
  }
  if (c.has("perturbation.conformal")) {
    enum CK { None, Cylinder, Gauss };
    CK k = choose<CK>(c, "perturbation.conformal", {{"none", None}, {"cylinder", Cylinder}, {"gaussian", Gauss}});
    if (k != None && chart.n() != 1)
      fail(ErrorKind::ConfigError, c.origin() + ": key 'perturbation.conformal': conformal paths need n = 1");
    if (k == Cylinder) {
      double ell = c.has("perturbation.conformal.ell") ? c.get<double>("perturbation.conformal.ell") : c.get<double>("chart.ell");
      confs.push_back(CylinderConformal{c.get<double>("perturbation.conformal.eps"), ell});
    } else if (k == Gauss) {
      GaussianConformal g;
      g.eps = c.get<double>("perturbation.conformal.eps");
      g.width = c.get<double>("perturbation.conformal.width", 1.0);
      g.center = c.has("perturbation.conformal.center") ? cd(c.complex_list("perturbation.conformal.center")[0]) : cd(0);
      confs.push_back(g);
    }
  }
  try {
    return FormFamily(chart, perts, confs, mode);
  } catch (const Error& e) {
    fail(ErrorKind::ConfigError, c.origin() + ": key 'perturbation.mode': " + e.what());
  }
}

inline TaskParams build_params(const Config& c) {
  TaskParams p;
  p.tol = c.get<double>("task.tol", 0.0);
  p.suite = c.get<std::string>("task.suite", p.suite);
  p.expect_critical = c.get<bool>("task.expect_critical", p.expect_critical);
  p.oracle_tol = c.get<double>("task.oracle_tol", p.oracle_tol);
  p.closedness_tol = c.get<double>("task.closedness_tol", p.closedness_tol);
  if (c.has("task.operator")) p.op = choose<std::string>(c, "task.operator", {{"ltilde", "ltilde"}, {"l", "l"}});
  p.eigenpairs = c.get<int>("task.eigenpairs", p.eigenpairs);
  p.dump_matrix = c.get<bool>("task.dump_matrix", p.dump_matrix);
  p.closed_form = c.get<bool>("task.closed_form", p.closed_form);
  p.t_end = c.get<double>("task.t_end", p.t_end);
  p.steps = c.get<int>("task.steps", p.steps);
  p.refine = c.get<bool>("task.refine", p.refine);
  p.round_trip = c.get<bool>("task.round_trip", p.round_trip);
  p.uniqueness = c.get<bool>("task.uniqueness", p.uniqueness);
  p.trials = c.get<int>("task.trials", p.trials);
  if (c.has("task.kernel"))
    p.kernel_isometry = choose<bool>(c, "task.kernel", {{"none", false}, {"isometry", true}});
  if (c.has("task.jacobian"))
    p.jacobian = choose<JacobianChoice>(c, "task.jacobian", {{"current", JacobianChoice::Current}, {"base", JacobianChoice::Base},
                                                             {"finite-difference", JacobianChoice::FiniteDifference}});
  if (c.has("task.chart"))
    p.chart = choose<WeinsteinChart>(c, "task.chart", {{"auto", WeinsteinChart::Auto}, {"first-order", WeinsteinChart::FirstOrder},
                                                       {"symplectic-normal", WeinsteinChart::SymplecticNormal}});
  if (p.steps < 1) fail(ErrorKind::ConfigError, c.origin() + ": key 'task.steps': must be >= 1");
  if (p.eigenpairs < 1) fail(ErrorKind::ConfigError, c.origin() + ": key 'task.eigenpairs': must be >= 1");
  if (p.trials < 1) fail(ErrorKind::ConfigError, c.origin() + ": key 'task.trials': must be >= 1");
  return p;
}

}  // namespace detail

/// Parses and builds a scenario. Paths in the config are relative to base_dir.
inline Scenario build_scenario(const Config& c, const Overrides& ov = {}, const std::filesystem::path& base_dir = ".") {
  Scenario s;
  s.name = c.get<std::string>("scenario.name");
  s.task = detail::choose<Task>(c, "scenario.task", {{"validate", Task::Validate}, {"maslov", Task::Maslov},
                                                     {"linearize", Task::Linearize}, {"moser", Task::Moser},
                                                     {"persist", Task::Persist}});
  s.seed = c.get<unsigned>("scenario.seed", 1u);  // validated even when overridden
  if (ov.seed) s.seed = *ov.seed;
  s.params = detail::build_params(c);
  if (ov.tol) s.params.tol = *ov.tol;
  s.experimental_nd = ov.experimental_nd;
  if (s.task != Task::Validate || c.has("chart.type")) {
    s.chart = share(detail::build_chart(c, s.chart_spec));
    if (!ov.resolution || c.has("immersion.resolution")) s.resolution = c.get<int>("immersion.resolution");
    if (ov.resolution) s.resolution = *ov.resolution;
    if (s.resolution < 4) fail(ErrorKind::ConfigError, c.origin() + ": key 'immersion.resolution': must be >= 4");
    s.immersion = detail::build_immersion(c, s.chart, s.resolution, base_dir, s.immersion_spec);
    s.family = detail::build_family(c, *s.chart);
  }
  c.reject_unused();
  if ((s.task == Task::Moser || s.task == Task::Persist) && !s.family)
    fail(ErrorKind::ConfigError, c.origin() + ": missing key 'perturbation.mode' (required by " + std::string(to_string(s.task)) + ")");
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path, const Overrides& ov = {}) {
  return build_scenario(Config::load(path), ov, path.parent_path());
}

}  // namespace trgeom
