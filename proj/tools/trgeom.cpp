// trgeom: scenario-driven front end.
//
// Exit status: 0 all certificates pass, 1 some certificate failed, 2 ConfigError, 3 TaskError.

#include <CLI11.hpp>
#include <iostream>

#include "tasks.hpp"
#include "trgeom/parallel.hpp"

#ifndef TRGEOM_SCENARIO_DIR
#define TRGEOM_SCENARIO_DIR "scenarios"
#endif

namespace {

using namespace trgeom;
namespace fs = std::filesystem;

struct Flags {
  std::optional<int> resolution;
  std::optional<double> tol;
  std::optional<unsigned> seed;
  int jobs = 1;
  std::string out;
  bool experimental_nd = false;
  bool dump_matrix = false;
  bool quiet = false;
};

void print_summary(const cli::RunResult& r, bool quiet) {
  const auto& s = r.summary;
  if (!quiet) {
    for (const auto& c : s["certificates"]) {
      Check k{c["name"], c["value"], c["bound"], c["relation"] == "<=", c["pass"]};
      std::cout << format_check(k) << "\n";
    }
  }
  std::cout << (r.pass ? "PASS " : "FAIL ") << s["scenario"].get<std::string>() << " (" << s["task"].get<std::string>()
            << ")\n";
}

int run(const fs::path& config, const std::string& expect_task, const Flags& f) {
  Overrides ov{f.resolution, f.tol, f.seed, f.experimental_nd};
  Scenario sc = load_scenario(config, ov);
  if (!expect_task.empty() && to_string(sc.task) != expect_task)
    fail(ErrorKind::ConfigError, config.string() + ": key 'scenario.task': '" + std::string(to_string(sc.task)) +
                                     "' does not match subcommand '" + expect_task + "'");
  fs::path out = f.out.empty() ? fs::path("out") / sc.name : fs::path(f.out);
  auto r = cli::run_scenario(sc, out, f.dump_matrix);
  print_summary(r, f.quiet);
  std::cout << "reports in " << out.string() << "\n";
  return r.pass ? 0 : 1;
}

int validate(const std::string& target, const Flags& f) {
  Scenario sc;
  sc.name = "validate-" + target;
  sc.task = Task::Validate;
  sc.seed = f.seed.value_or(1);
  sc.params.suite = target;
  if (target != "all" && target != "acceptance" &&
      std::find(module_names().begin(), module_names().end(), target) == module_names().end())
    fail(ErrorKind::ConfigError, "unknown validation target '" + target + "'");
  fs::path out = f.out.empty() ? fs::path("out") / sc.name : fs::path(f.out);
  auto r = cli::run_scenario(sc, out);
  for (const auto& suite : r.summary["results"]["suites"]) {
    std::cout << (suite["pass"].get<bool>() ? "PASS " : "FAIL ") << suite["suite"].get<std::string>() << "\n";
    for (const auto& c : suite["checks"]) {
      Check k{c["name"], c["value"], c["bound"], c["relation"] == "<=", c["pass"]};
      std::cout << format_check(k) << "\n";
    }
    if (!suite["error"].get<std::string>().empty()) std::cout << "  error: " << suite["error"].get<std::string>() << "\n";
  }
  std::cout << (r.pass ? "all checks pass" : "some checks failed") << "\n";
  return r.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Totally real immersions: Maslov form, linearised operators, Moser transport and continuation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Flags f;
  app.add_option("--resolution", f.resolution, "Grid nodes per axis (overrides the config)")->check(CLI::Range(4, 1 << 16));
  app.add_option("--tol", f.tol, "Task certificate tolerance (overrides the config)")->check(CLI::PositiveNumber);
  app.add_option("--seed", f.seed, "Random seed (overrides the config)");
  app.add_option("--jobs", f.jobs, "Worker threads for node loops (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", f.out, "Output directory (default out/<scenario>)");
  app.add_flag("--experimental-nd", f.experimental_nd, "Allow continuation for n >= 2 with the first-order chart");
  app.add_flag("-q,--quiet", f.quiet, "Only print the verdict");

  std::string target = "all";
  auto* val = app.add_subcommand("validate", "Run the property suites of one module, 'all' or 'acceptance'");
  val->add_option("target", target, "trlinalg | kahler | immersion | maslov | linearize | isotopy | persist | all | acceptance");

  const fs::path bundled(TRGEOM_SCENARIO_DIR);
  struct TaskCmd {
    const char* name;
    const char* help;
    const char* scenario;
    std::string config;
    CLI::App* sub = nullptr;
  };
  std::vector<TaskCmd> tasks{{"maslov", "Maslov form, H_J and closedness report", "clifford_maslov.cfg", {}},
                             {"linearize", "Assemble L~ or L and report eigenpairs", "core_geodesic_linearize.cfg", {}},
                             {"moser", "Moser transport along a form family", "moser_clifford.cfg", {}},
                             {"persist", "Continuation of a minimal Lagrangian", "hyperbolic_persistence.cfg", {}}};
  for (auto& t : tasks) {
    t.sub = app.add_subcommand(t.name, t.help);
    t.config = (bundled / t.scenario).string();
    t.sub->add_option("config", t.config, "Scenario config (default: bundled " + std::string(t.scenario) + ")");
    if (std::string(t.name) == "linearize") t.sub->add_flag("--dump-matrix", f.dump_matrix, "Write the assembled operator to matrix.csv");
  }
  std::string config;
  auto* runc = app.add_subcommand("run", "Run the task named in a scenario config");
  runc->add_option("config", config, "Scenario config")->required();

  CLI11_PARSE(app, argc, argv);
  set_jobs(f.jobs);
  try {
    if (*val) return validate(target, f);
    if (*runc) return run(config, "", f);
    for (auto& t : tasks)
      if (*t.sub) return run(t.config, t.name, f);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == ErrorKind::ConfigError ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "TaskError: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
