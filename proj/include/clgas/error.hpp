#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clgas {

enum class ErrorKind {
  ZeroSeparation,
  MissingConstants,
  InvalidConfig,
  StepFailure,
  CapHit,
  InfeasibleFit,
  DegenerateSeries,
  EmptyEnsemble,
  DimensionMismatch,
  ParseError,
  ValidationError,
  FormatError,
  TruncationError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace clgas
