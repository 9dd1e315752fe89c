#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stochdyn {

enum class ErrorCode {
  ZeroPoint,
  DegreeMismatch,
  ConvergenceFailure,
  DegenerateMap,
  DegreeTooLow,
  CommonFactor,
  InvalidSystem,
  WordCapExceeded,
  IntegerOverflowBudget,
  InfinitePoint,
  NotIrreducible,
  NodeBudgetExceeded,
  QuadratureFailure,
  ExceptionalStart,
  UnsupportedStructure,
  InvalidArgument,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stochdyn
