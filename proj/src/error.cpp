#include "conemorse/error.hpp"

namespace conemorse {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNotAChainMap: return "NotAChainMap";
    case ErrorCode::kDegenerateSystem: return "DegenerateSystem";
    case ErrorCode::kInexactDivision: return "InexactDivision";
    case ErrorCode::kNegativeCoefficient: return "NegativeCoefficient";
    case ErrorCode::kBoundaryNotSquareZero: return "BoundaryNotSquareZero";
    case ErrorCode::kLeibnizViolation: return "LeibnizViolation";
    case ErrorCode::kInvalidRanks: return "InvalidRanks";
    case ErrorCode::kInequalityViolated: return "InequalityViolated";
    case ErrorCode::kNonTransverseSuspected: return "NonTransverseSuspected";
    case ErrorCode::kDidNotConverge: return "DidNotConverge";
    case ErrorCode::kPoleSingularity: return "PoleSingularity";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace conemorse
