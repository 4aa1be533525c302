#include "clgas/error.hpp"

namespace clgas {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroSeparation: return "ZeroSeparation";
    case ErrorKind::MissingConstants: return "MissingConstants";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::CapHit: return "CapHit";
    case ErrorKind::InfeasibleFit: return "InfeasibleFit";
    case ErrorKind::DegenerateSeries: return "DegenerateSeries";
    case ErrorKind::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::TruncationError: return "TruncationError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace clgas
