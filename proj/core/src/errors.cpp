#include "robinspec/errors.hpp"

namespace robinspec {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ChainNotClosed: return "ChainNotClosed";
    case ErrorCode::DegenerateAngle: return "DegenerateAngle";
    case ErrorCode::SelfIntersection: return "SelfIntersection";
    case ErrorCode::ObtuseHalfAngle: return "ObtuseHalfAngle";
    case ErrorCode::DeltaTooLarge: return "DeltaTooLarge";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::QualityFailure: return "QualityFailure";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::SingularGeometry: return "SingularGeometry";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::ShiftTooClose: return "ShiftTooClose";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::RootBracketFailure: return "RootBracketFailure";
    case ErrorCode::NonSelfAdjointInput: return "NonSelfAdjointInput";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::CountUnstable: return "CountUnstable";
    case ErrorCode::NegativeGap: return "NegativeGap";
    case ErrorCode::FormulaInapplicable: return "FormulaInapplicable";
    case ErrorCode::BracketViolationBeyondBudget:
      return "BracketViolationBeyondBudget";
    case ErrorCode::InsufficientSignal: return "InsufficientSignal";
    case ErrorCode::BadInput: return "BadInput";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace robinspec
