#pragma once

#include <stdexcept>
#include <string>

namespace maats {

enum class ErrorCode {
  DegenerateNorm,
  SingularMassMatrix,
  DegenerateThrust,
  AttitudeSingularity,
  QpInfeasible,
  QpNotConvex,
  BaselineInfeasible,
  InvalidConfig,
  NonFiniteState,
  EmptyRun,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-checkable code next to the diagnostic text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace maats
