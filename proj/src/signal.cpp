#include "signal.hpp"

#include <cmath>

#include "error.hpp"

namespace sdnid {

Signal::Signal(Eigen::MatrixXd values, double ts, std::vector<std::string> names)
    : values_(std::move(values)), ts_(ts), names_(std::move(names)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw Error(ErrorCode::kData, "signal has no samples");
  }
  if (!(ts_ > 0.0) || !std::isfinite(ts_)) {
    throw Error(ErrorCode::kInvalidArgument, "sampling interval must be positive");
  }
  if (!values_.allFinite()) {
    throw Error(ErrorCode::kData, "signal contains non-finite values");
  }
  if (names_.empty()) {
    for (Eigen::Index c = 0; c < values_.cols(); ++c) {
      names_.push_back("ch" + std::to_string(c));
    }
  } else if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "channel name count does not match columns");
  }
}

Signal Signal::slice(Eigen::Index begin, Eigen::Index end) const {
  if (begin < 0 || end > length() || begin >= end) {
    throw Error(ErrorCode::kInvalidArgument,
                "slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                    ") outside signal of length " + std::to_string(length()));
  }
  return Signal(values_.middleRows(begin, end - begin), ts_, names_);
}

Signal Signal::with_ts(double ts) const { return Signal(values_, ts, names_); }

bool Signal::operator==(const Signal& other) const {
  return ts_ == other.ts_ && names_ == other.names_ &&
         values_.rows() == other.values_.rows() &&
         values_.cols() == other.values_.cols() && values_ == other.values_;
}

}  // namespace sdnid
