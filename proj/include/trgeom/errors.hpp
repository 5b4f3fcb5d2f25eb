#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trgeom {

enum class ErrorKind {
  DimensionMismatch,
  NearComplexPlane,
  OutOfDomain,
  DerivativeOrderUnavailable,
  NoEinsteinConstant,
  LeftDomain,
  InvalidImmersion,
  SingularA,
  NotCritical,
  EigensolverFailure,
  DegenerateForm,
  NotExact,
  NewtonDiverged,
  SingularJacobian,
  StepFailed,
  ContinuationStalled,
  ConfigError,
  TaskError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NearComplexPlane: return "NearComplexPlane";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::DerivativeOrderUnavailable: return "DerivativeOrderUnavailable";
    case ErrorKind::NoEinsteinConstant: return "NoEinsteinConstant";
    case ErrorKind::LeftDomain: return "LeftDomain";
    case ErrorKind::InvalidImmersion: return "InvalidImmersion";
    case ErrorKind::SingularA: return "SingularA";
    case ErrorKind::NotCritical: return "NotCritical";
    case ErrorKind::EigensolverFailure: return "EigensolverFailure";
    case ErrorKind::DegenerateForm: return "DegenerateForm";
    case ErrorKind::NotExact: return "NotExact";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::StepFailed: return "StepFailed";
    case ErrorKind::ContinuationStalled: return "ContinuationStalled";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::TaskError: return "TaskError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace trgeom
