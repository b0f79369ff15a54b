#pragma once

#include <stdexcept>
#include <string>

namespace robinspec {

/// Machine-checkable failure codes carried by every robinspec::Error.
enum class ErrorCode {
  // geometry
  ChainNotClosed,
  DegenerateAngle,
  SelfIntersection,
  ObtuseHalfAngle,
  DeltaTooLarge,
  NoConvergence,
  // mesh
  QualityFailure,
  EmptyDomain,
  // fem2d
  SingularGeometry,
  NotConverged,
  ShiftTooClose,
  ZeroVector,
  // model1d
  RootBracketFailure,
  NonSelfAdjointInput,
  GridTooCoarse,
  // sectors
  CountUnstable,
  NegativeGap,
  // effective
  FormulaInapplicable,
  // harness
  BracketViolationBeyondBudget,
  InsufficientSignal,
  // generic
  BadInput,
  IoFailure,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception type used across the library; wraps a code and a message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Throw an Error with the given code; message is prefixed with the code name.
[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace robinspec
