#pragma once

#include <stdexcept>
#include <string>

namespace sdnid {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  kDiverged,
  kDegenerate,
  kRankDeficient,
  kData,
  kIo,
  kTrainingFailed,
  kSweepFailed,
};

const char* to_string(ErrorCode code);

// All recoverable failures in the library are reported through this type; the
// C API maps `code()` onto its status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the RK4 guard. `step` is the rollout step, `stage` the RK4 stage
// (1..4, 0 for the accepted state).
class DivergenceError : public Error {
 public:
  DivergenceError(long step, int stage, const std::string& what)
      : Error(ErrorCode::kDiverged, what), step_(step), stage_(stage) {}

  long step() const { return step_; }
  int stage() const { return stage_; }

 private:
  long step_;
  int stage_;
};

}  // namespace sdnid
