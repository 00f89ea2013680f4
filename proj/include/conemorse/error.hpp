#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conemorse {

/// Error categories raised by the library. The CLI maps each to an exit code.
enum class ErrorCode {
  kNonFiniteEntry,
  kShapeMismatch,
  kNotAChainMap,
  kDegenerateSystem,
  kInexactDivision,
  kNegativeCoefficient,
  kBoundaryNotSquareZero,
  kLeibnizViolation,
  kInvalidRanks,
  kInequalityViolated,
  kNonTransverseSuspected,
  kDidNotConverge,
  kPoleSingularity,
  kSchemaError,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace conemorse
