#include "fraclab/error.hpp"

namespace fraclab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::AllocationError: return "AllocationError";
    case ErrorCode::UnsupportedFunction: return "UnsupportedFunction";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::SingularNode: return "SingularNode";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::SolveFailure: return "SolveFailure";
    case ErrorCode::NonpositiveState: return "NonpositiveState";
    case ErrorCode::BallTooSmall: return "BallTooSmall";
    case ErrorCode::InsufficientEvidence: return "InsufficientEvidence";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace fraclab
