#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sdnid {

// Uniformly sampled multichannel series. Row k holds the sample at k * ts.
class Signal {
 public:
  Signal() = default;
  // Throws kData when the values are empty or non-finite, kInvalidArgument
  // when ts <= 0 or the channel names do not match the column count.
  Signal(Eigen::MatrixXd values, double ts, std::vector<std::string> names = {});

  const Eigen::MatrixXd& values() const { return values_; }
  double ts() const { return ts_; }
  const std::vector<std::string>& names() const { return names_; }

  Eigen::Index length() const { return values_.rows(); }
  Eigen::Index channels() const { return values_.cols(); }
  Eigen::VectorXd sample(Eigen::Index k) const { return values_.row(k).transpose(); }

  // Contiguous rows [begin, end).
  Signal slice(Eigen::Index begin, Eigen::Index end) const;
  Signal with_ts(double ts) const;

  bool operator==(const Signal& other) const;

 private:
  Eigen::MatrixXd values_;
  double ts_ = 1.0;
  std::vector<std::string> names_;
};

}  // namespace sdnid
