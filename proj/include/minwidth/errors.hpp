#pragma once

#include <stdexcept>
#include <string>

namespace minwidth {

// Every failure a builder can hit, so callers (and the CLI) can map them to
// exit codes and stage names without string matching.
enum class ErrorKind {
  NonDifferentiable,
  ZeroDerivative,
  LambdaUnderflow,
  NoWindowFound,
  NotIncreasing,
  IterationCap,
  MonotonicityLoss,
  CertificateInvalid,
  DimensionMismatch,
  ActivationMismatch,
  IndexOutOfRange,
  BudgetInfeasible,
  VerificationFailed,
  GapTooSmall,
  StepBuildFailed,
  BandNotFound,
  CodePointInfeasible,
  InfeasibleTolerance,
  InvalidArgument,
  IoError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonDifferentiable: return "NonDifferentiable";
    case ErrorKind::ZeroDerivative: return "ZeroDerivative";
    case ErrorKind::LambdaUnderflow: return "LambdaUnderflow";
    case ErrorKind::NoWindowFound: return "NoWindowFound";
    case ErrorKind::NotIncreasing: return "NotIncreasing";
    case ErrorKind::IterationCap: return "IterationCap";
    case ErrorKind::MonotonicityLoss: return "MonotonicityLoss";
    case ErrorKind::CertificateInvalid: return "CertificateInvalid";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ActivationMismatch: return "ActivationMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::BudgetInfeasible: return "BudgetInfeasible";
    case ErrorKind::VerificationFailed: return "VerificationFailed";
    case ErrorKind::GapTooSmall: return "GapTooSmall";
    case ErrorKind::StepBuildFailed: return "StepBuildFailed";
    case ErrorKind::BandNotFound: return "BandNotFound";
    case ErrorKind::CodePointInfeasible: return "CodePointInfeasible";
    case ErrorKind::InfeasibleTolerance: return "InfeasibleTolerance";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class BuildError : public std::runtime_error {
 public:
  BuildError(ErrorKind kind, std::string stage, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " [" + stage + "]: " + what),
        kind_(kind),
        stage_(std::move(stage)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& stage() const { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& stage, const std::string& what) {
  throw BuildError(kind, stage, what);
}

}  // namespace minwidth
