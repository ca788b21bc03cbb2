#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "signal.hpp"

namespace sdnid::data {

struct IoData {
  Signal u;
  Signal y;

  Eigen::Index length() const { return u.length(); }
  IoData slice(Eigen::Index begin, Eigen::Index end) const {
    return {u.slice(begin, end), y.slice(begin, end)};
  }
};

// Header row, one sample per row. Only the requested columns are parsed, so
// other columns may hold anything (including empty cells).
IoData load_csv(const std::string& path, const std::vector<std::string>& u_columns,
                const std::vector<std::string>& y_columns, double ts, char delimiter = ',');
// Writes u channels then y channels with 17 significant digits.
void save_csv(const std::string& path, const IoData& data, char delimiter = ',');

// Generic delimiter-separated writer shared by the history and sweep tables.
class TableWriter {
 public:
  TableWriter(const std::string& path, std::vector<std::string> header, char delimiter = ',');
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
  char delimiter_;
};

std::string format_number(double v);

// Per-channel z-score transform.
struct Scaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  // Needs >= 2 samples; a constant channel is rejected by name.
  static Scaler fit(const Signal& signal);
  Signal apply(const Signal& signal) const;
  Signal invert(const Signal& signal) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& values) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& values) const;
};

// Two-tank cascade with overflow:
//   x1' = -k1 sqrt(x1) + k4 u,   x2' = k2 sqrt(x1) - k3 sqrt(x2)
// states hard-clamped to [0, x_max]; y = x2 + white noise.
struct CtsParams {
  double k1 = 0.10;
  double k2 = 0.10;
  double k3 = 0.08;
  double k4 = 0.08;
  double x_max = 10.0;
  int substeps = 25;
};

struct CtsRun {
  Signal y;
  Eigen::MatrixXd states;  // K x 2, noise free
  double noise_std = 0.0;
};

// noise_snr_db = +inf disables noise. SNR is var(clean y) / var(noise).
CtsRun cts_oracle(const Signal& u, const CtsParams& params,
                  const Eigen::Vector2d& x0 = Eigen::Vector2d::Zero(),
                  double noise_snr_db = std::numeric_limits<double>::infinity(),
                  std::uint64_t seed = 0);

// Piecewise-constant excitation: levels U[0, u_max] held for a uniformly
// drawn number of samples in [hold_min, hold_max].
Signal random_steps(Eigen::Index length, double ts, double u_max, int hold_min, int hold_max,
                    std::uint64_t seed);

struct Splits {
  IoData train;
  IoData val;
  IoData test;
  // Validation taken from the test record (benchmark protocol).
  bool validation_from_test = false;
};

inline constexpr Eigen::Index kBenchmarkValidationLength = 512;

// Benchmark protocol: train record as is, validation = first `val_length`
// samples of the test record, test = full test record.
Splits split_benchmark(const IoData& train, const IoData& test,
                       Eigen::Index val_length = kBenchmarkValidationLength);

struct Range {
  Eigen::Index begin;
  Eigen::Index end;
};

// Contiguous [begin, end) pieces; empty, out-of-range or overlapping ranges
// are rejected.
std::vector<IoData> split_ranges(const IoData& data, const std::vector<Range>& ranges);

// Contiguous train / val / test by fractions of the record (sum <= 1).
Splits split_fractions(const IoData& data, double train, double val, double test);

}  // namespace sdnid::data
