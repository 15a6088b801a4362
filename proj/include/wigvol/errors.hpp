#pragma once

#include <stdexcept>
#include <string>

namespace wigvol {

enum class ErrorKind {
  NonHermitianInput,
  NotAState,
  DimensionMismatch,
  BadIndex,
  BadNoise,
  BadBeta,
  BadDim,
  DegenerateTriple,
  NoAffineMap,
  UnsupportedState,
  CutoffTooSmall,
  UnderResolved,
  ImaginaryResidue,
  InsufficientSupport,
  NonIntegrable,
  TooLarge,
  UnknownCase,
  SingularPoint,
  SchemaMismatch,
  ConfigError
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonHermitianInput: return "NonHermitianInput";
    case ErrorKind::NotAState: return "NotAState";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BadIndex: return "BadIndex";
    case ErrorKind::BadNoise: return "BadNoise";
    case ErrorKind::BadBeta: return "BadBeta";
    case ErrorKind::BadDim: return "BadDim";
    case ErrorKind::DegenerateTriple: return "DegenerateTriple";
    case ErrorKind::NoAffineMap: return "NoAffineMap";
    case ErrorKind::UnsupportedState: return "UnsupportedState";
    case ErrorKind::CutoffTooSmall: return "CutoffTooSmall";
    case ErrorKind::UnderResolved: return "UnderResolved";
    case ErrorKind::ImaginaryResidue: return "ImaginaryResidue";
    case ErrorKind::InsufficientSupport: return "InsufficientSupport";
    case ErrorKind::NonIntegrable: return "NonIntegrable";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::UnknownCase: return "UnknownCase";
    case ErrorKind::SingularPoint: return "SingularPoint";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// errors raised by the numeric engine rather than by bad input
inline bool is_numeric_guard(ErrorKind k) {
  switch (k) {
    case ErrorKind::CutoffTooSmall:
    case ErrorKind::UnderResolved:
    case ErrorKind::ImaginaryResidue:
    case ErrorKind::InsufficientSupport:
    case ErrorKind::NonIntegrable:
    case ErrorKind::TooLarge:
    case ErrorKind::SingularPoint:
      return true;
    default:
      return false;
  }
}

}  // namespace wigvol
