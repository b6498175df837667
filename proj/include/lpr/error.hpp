#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lpr {

enum class ErrorCode {
  SingularMatrix,
  EvaluationFailure,
  NonFiniteState,
  NoConvergence,
  ChartDomainExceeded,
  ModelInvalid,
  DomainViolation,
  SingularFP,
  SingularOrbitMetric,
  GridMismatch,
  RankDeficient,
  ParseError,
  UnknownKey,
  OutOfRange,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::EvaluationFailure: return "EvaluationFailure";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ChartDomainExceeded: return "ChartDomainExceeded";
    case ErrorCode::ModelInvalid: return "ModelInvalid";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::SingularFP: return "SingularFP";
    case ErrorCode::SingularOrbitMetric: return "SingularOrbitMetric";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::OutOfRange: return "OutOfRange";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message is prefixed with the code name so CLI diagnostics stay greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace lpr
