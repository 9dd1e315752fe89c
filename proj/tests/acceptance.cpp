// Acceptance battery: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion-id ...]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "stochdyn/acceptance.hpp"

int main(int argc, char** argv) {
  using namespace stochdyn;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty())
    for (int id = 1; id <= kCriteriaCount; ++id) ids.push_back(id);
  int failed = 0;
  for (int id : ids) {
    CriterionResult r = run_criterion(id);
    std::printf("%s\n", format_result(r).c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed == 0 ? 0 : 1;
}
