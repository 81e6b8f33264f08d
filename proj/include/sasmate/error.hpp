#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sasmate {

enum class ErrorCode {
  // formulas and SLD
  UnknownElement,
  UnbalancedParenthesis,
  ZeroCount,
  EmptyFormula,
  NonPositiveDensity,
  // models
  UnknownModel,
  UnknownParameter,
  ParameterOutOfBounds,
  InvalidRange,
  InvalidDataset,
  // data files
  NoNumericRows,
  InconsistentColumnCount,
  NonPositiveQ,
  // fitting
  InvalidFitProblem,
  DegreesOfFreedomExhausted,
  SingularJacobian,
  EvaluationFailure,
  // documentation
  DuplicateDocId,
  EmptyQuery,
  UnknownDoc,
  // agents
  BackendError,
  ToolArgumentInvalid,
  UnknownTool,
  InvalidScenario,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownElement: return "UnknownElement";
    case ErrorCode::UnbalancedParenthesis: return "UnbalancedParenthesis";
    case ErrorCode::ZeroCount: return "ZeroCount";
    case ErrorCode::EmptyFormula: return "EmptyFormula";
    case ErrorCode::NonPositiveDensity: return "NonPositiveDensity";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::UnknownParameter: return "UnknownParameter";
    case ErrorCode::ParameterOutOfBounds: return "ParameterOutOfBounds";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::NoNumericRows: return "NoNumericRows";
    case ErrorCode::InconsistentColumnCount: return "InconsistentColumnCount";
    case ErrorCode::NonPositiveQ: return "NonPositiveQ";
    case ErrorCode::InvalidFitProblem: return "InvalidFitProblem";
    case ErrorCode::DegreesOfFreedomExhausted: return "DegreesOfFreedomExhausted";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::EvaluationFailure: return "EvaluationFailure";
    case ErrorCode::DuplicateDocId: return "DuplicateDocId";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::UnknownDoc: return "UnknownDoc";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::ToolArgumentInvalid: return "ToolArgumentInvalid";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code; the
/// message is "<Code>: <detail>" so it can be shown to users and agents as-is.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace sasmate
