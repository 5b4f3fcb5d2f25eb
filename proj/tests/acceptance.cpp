// One pass/fail line per acceptance criterion; exit status 1 if any fails.
// --verbose prints every measured residual; --only k runs a single criterion.

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "trgeom/validate.hpp"

int main(int argc, char** argv) {
  bool verbose = false;
  int only = 0;
  for (int a = 1; a < argc; ++a) {
    if (!std::strcmp(argv[a], "--verbose")) verbose = true;
    else if (!std::strcmp(argv[a], "--only") && a + 1 < argc) only = std::atoi(argv[++a]);
  }
  auto criteria = trgeom::acceptance_criteria();
  int failed = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    if (only && static_cast<int>(k) + 1 != only) continue;
    auto s = criteria[k]();
    std::printf("%-4s criterion %2zu  %-38s (%.1f s)\n", s.pass() ? "PASS" : "FAIL", k + 1, s.name.c_str(), s.seconds);
    if (verbose || !s.pass()) {
      for (const auto& c : s.checks) std::printf("%s\n", trgeom::format_check(c).c_str());
      if (!s.error.empty()) std::printf("  error: %s\n", s.error.c_str());
    }
    std::fflush(stdout);
    failed += !s.pass();
  }
  return failed ? 1 : 0;
}
