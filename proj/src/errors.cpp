#include "cicw/errors.hpp"

namespace cicw {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kShapeMismatch: return "shape_mismatch";
    case ErrorKind::kNumericRange: return "numeric_range";
    case ErrorKind::kInfeasibleHyperparameter: return "infeasible_hyperparameter";
    case ErrorKind::kDegenerateBatch: return "degenerate_batch";
    case ErrorKind::kDegeneratePair: return "degenerate_pair";
    case ErrorKind::kSolverFailure: return "solver_failure";
    case ErrorKind::kRadiusTooLarge: return "radius_too_large";
    case ErrorKind::kInternalConsistency: return "internal_consistency";
    case ErrorKind::kInvalidMapping: return "invalid_mapping";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace cicw
