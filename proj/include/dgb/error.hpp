#pragma once

#include <stdexcept>
#include <string>

namespace dgb {

/// Failure signals raised by the library. Each kind maps to one of two
/// process-level categories: invalid input, or a numerical failure.
enum class ErrorKind {
  InvalidParameters,
  InvalidConfig,
  TruncationAliasing,
  HermitianViolation,
  EmptyScan,
  MultiplicityViolation,
  InvalidSupport,
  TruncationTooCoarse,
  DecompositionBug,
  ProfileDegenerate,
  BackwardTime,
  BlowUp,
  NumericalDegeneracy,
  DegenerateGramian,
  IllPosedHorizon,
  Uncontrollable,
  ResolutionInsufficient,
  ObservabilityFailure,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameters: return "invalid-parameters";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::TruncationAliasing: return "truncation-aliasing";
    case ErrorKind::HermitianViolation: return "hermitian-violation";
    case ErrorKind::EmptyScan: return "empty-scan";
    case ErrorKind::MultiplicityViolation: return "multiplicity-violation";
    case ErrorKind::InvalidSupport: return "invalid-support";
    case ErrorKind::TruncationTooCoarse: return "truncation-too-coarse";
    case ErrorKind::DecompositionBug: return "decomposition-bug";
    case ErrorKind::ProfileDegenerate: return "profile-degenerate";
    case ErrorKind::BackwardTime: return "backward-time";
    case ErrorKind::BlowUp: return "blow-up";
    case ErrorKind::NumericalDegeneracy: return "numerical-degeneracy";
    case ErrorKind::DegenerateGramian: return "degenerate-gramian";
    case ErrorKind::IllPosedHorizon: return "ill-posed-horizon";
    case ErrorKind::Uncontrollable: return "uncontrollable";
    case ErrorKind::ResolutionInsufficient: return "resolution-insufficient";
    case ErrorKind::ObservabilityFailure: return "observability-failure";
  }
  return "unknown";
}

/// True for signals caused by bad input rather than by the numerics.
inline bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameters:
    case ErrorKind::InvalidConfig:
    case ErrorKind::TruncationAliasing:
    case ErrorKind::EmptyScan:
    case ErrorKind::InvalidSupport:
    case ErrorKind::BackwardTime:
    case ErrorKind::DegenerateGramian:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The text without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

/// Raised when a time integration produces NaN or leaves the blow-up ball.
class BlowUpError : public Error {
 public:
  BlowUpError(double last_valid_time, const std::string& what)
      : Error(ErrorKind::BlowUp, what), last_valid_time_(last_valid_time) {}

  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

}  // namespace dgb
