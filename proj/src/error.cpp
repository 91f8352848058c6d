#include "maploc/error.hpp"

namespace maploc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kDegenerateNeighborhood: return "DegenerateNeighborhood";
    case ErrorCode::kNoCorrespondences: return "NoCorrespondences";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kZeroAcceleration: return "ZeroAcceleration";
    case ErrorCode::kNonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::kWindowTooShort: return "WindowTooShort";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kNotAnchored: return "NotAnchored";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kNoMatches: return "NoMatches";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kNoInliers: return "NoInliers";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInitializationFailure: return "InitializationFailure";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace maploc
