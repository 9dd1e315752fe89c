#pragma once

// JSON system configuration shared by the command line and the acceptance
// suite. Rationals travel as strings ("p/q") so probabilities stay exact.

#include <cstdint>
#include <string>
#include <vector>

#include "stochdyn/dynsys.hpp"

namespace stochdyn {

struct MapConfig {
  std::vector<long long> num_coeffs;  // ascending powers of z
  std::vector<long long> den_coeffs;
  std::string prob;  // "p/q"
};

struct SystemConfig {
  std::vector<MapConfig> maps;
  std::uint64_t seed = 1;
  int depth = 30;
  std::size_t samples = 100000;
  double tol = 1e-4;
  int precision = 15;

  /// Builds and validates the system (InvalidSystem, DegreeTooLow, CommonFactor, ...).
  StochasticSystem system() const;
  std::string canonical_json() const;
};

/// ParseError for unreadable files and malformed JSON; field types are checked.
SystemConfig load_config(const std::string& path);
SystemConfig parse_config(const std::string& text);

/// FNV-1a (64-bit) of the canonical JSON form, as 16 hex digits.
std::string config_hash(const SystemConfig& c);

extern const char* const kVersion;

}  // namespace stochdyn
