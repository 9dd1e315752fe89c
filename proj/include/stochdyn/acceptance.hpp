#pragma once

// The acceptance battery: fourteen numbered checks with pinned tolerances,
// shared by the acceptance test binary and the `suite` command.

#include <cstdint>
#include <string>
#include <vector>

namespace stochdyn {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240601;
  unsigned workers = 0;
};

inline constexpr int kCriteriaCount = 14;

CriterionResult run_criterion(int id, const AcceptanceOptions& opts = {});
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {});

/// "[PASS] 01 title: detail (1.23 s)"
std::string format_result(const CriterionResult& r);

}  // namespace stochdyn
