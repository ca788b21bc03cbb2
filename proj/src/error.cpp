#include "error.hpp"

namespace sdnid {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kDiverged: return "integration diverged";
    case ErrorCode::kDegenerate: return "degenerate trajectory";
    case ErrorCode::kRankDeficient: return "rank-deficient regression";
    case ErrorCode::kData: return "data error";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kTrainingFailed: return "training failed";
    case ErrorCode::kSweepFailed: return "sweep failed";
  }
  return "unknown error";
}

}  // namespace sdnid
