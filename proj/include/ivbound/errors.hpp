#pragma once

#include <stdexcept>
#include <string>

namespace ivbound {

enum class ErrorCode {
  BadCsv,
  MissingColumn,
  NonBinaryValue,
  NonFiniteValue,
  EmptyInstrumentCell,
  RankDeficientDesign,
  SeparationDetected,
  MaxIterationsExceeded,
  DimensionMismatch,
  EmptyArm,
  DegenerateWeights,
  SingularDenominator,
  WeakInstrument,
  EmptyCell,
  InvalidBound,
  TooManyFailures,
  InsufficientReplicates,
  InfeasibleTau,
  InvalidArgument,
  IoFailure,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadCsv: return "BadCsv";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonBinaryValue: return "NonBinaryValue";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::EmptyInstrumentCell: return "EmptyInstrumentCell";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyArm: return "EmptyArm";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::SingularDenominator: return "SingularDenominator";
    case ErrorCode::WeakInstrument: return "WeakInstrument";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::InvalidBound: return "InvalidBound";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
    case ErrorCode::InsufficientReplicates: return "InsufficientReplicates";
    case ErrorCode::InfeasibleTau: return "InfeasibleTau";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace ivbound
