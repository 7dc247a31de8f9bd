#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cptwin {

enum class ErrorCode {
  InvalidArgument,
  OutOfValidityWindow,
  AboveBandgap,
  InvalidDesignParams,
  NoResonanceInWindow,
  MultipleResonances,
  NoGuidedMode,
  NonGuidingStack,
  ModeTrackingLost,
  NoSolutionInWindow,
  KernelUnderResolved,
  NoPeak,
  HalfMaxNotBracketed,
  DivisionDomain,
  NonPhysicalInput,
  NoConvergence,
  DegenerateScan,
  ConfigError,
  SchemaError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfValidityWindow: return "OutOfValidityWindow";
    case ErrorCode::AboveBandgap: return "AboveBandgap";
    case ErrorCode::InvalidDesignParams: return "InvalidDesignParams";
    case ErrorCode::NoResonanceInWindow: return "NoResonanceInWindow";
    case ErrorCode::MultipleResonances: return "MultipleResonances";
    case ErrorCode::NoGuidedMode: return "NoGuidedMode";
    case ErrorCode::NonGuidingStack: return "NonGuidingStack";
    case ErrorCode::ModeTrackingLost: return "ModeTrackingLost";
    case ErrorCode::NoSolutionInWindow: return "NoSolutionInWindow";
    case ErrorCode::KernelUnderResolved: return "KernelUnderResolved";
    case ErrorCode::NoPeak: return "NoPeak";
    case ErrorCode::HalfMaxNotBracketed: return "HalfMaxNotBracketed";
    case ErrorCode::DivisionDomain: return "DivisionDomain";
    case ErrorCode::NonPhysicalInput: return "NonPhysicalInput";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateScan: return "DegenerateScan";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// True for failures caused by bad user input (config, schema, ranges) as
// opposed to numerical failures of a solver.
inline bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::OutOfValidityWindow:
    case ErrorCode::AboveBandgap:
    case ErrorCode::InvalidDesignParams:
    case ErrorCode::NonPhysicalInput:
    case ErrorCode::ConfigError:
    case ErrorCode::SchemaError:
    case ErrorCode::IoError:
    case ErrorCode::KernelUnderResolved:
      return true;
    default:
      return false;
  }
}

}  // namespace cptwin
