#include "data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "error.hpp"

namespace sdnid::data {
namespace {

std::string clean_cell(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delimiter)) cells.push_back(clean_cell(cell));
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::string& path) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorCode::kData, path + ": missing column '" + name + "'");
}

double variance(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size());
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

IoData load_csv(const std::string& path, const std::vector<std::string>& u_columns,
                const std::vector<std::string>& y_columns, double ts, char delimiter) {
  if (u_columns.empty() || y_columns.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "load_csv: need at least one u and one y column");
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kData, path + ": empty file");
  const std::vector<std::string> header = split_line(line, delimiter);

  std::vector<std::size_t> cols;
  for (const auto& c : u_columns) cols.push_back(column_index(header, c, path));
  for (const auto& c : y_columns) cols.push_back(column_index(header, c, path));

  std::vector<std::vector<double>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (clean_cell(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line, delimiter);
    std::vector<double> row;
    row.reserve(cols.size());
    for (std::size_t c : cols) {
      const std::string cell = c < cells.size() ? cells[c] : std::string();
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(v)) {
        throw Error(ErrorCode::kData, path + ": non-numeric cell at line " +
                                          std::to_string(lineno) + ", column '" +
                                          header[c] + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::kData, path + ": no data rows");

  const auto k = static_cast<Eigen::Index>(rows.size());
  const auto nu = static_cast<Eigen::Index>(u_columns.size());
  const auto ny = static_cast<Eigen::Index>(y_columns.size());
  Eigen::MatrixXd u(k, nu);
  Eigen::MatrixXd y(k, ny);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < nu; ++c) u(r, c) = rows[r][c];
    for (Eigen::Index c = 0; c < ny; ++c) y(r, c) = rows[r][nu + c];
  }
  return {Signal(std::move(u), ts, u_columns), Signal(std::move(y), ts, y_columns)};
}

void save_csv(const std::string& path, const IoData& data, char delimiter) {
  if (data.u.length() != data.y.length()) {
    throw Error(ErrorCode::kInvalidArgument, "save_csv: u and y lengths differ");
  }
  std::vector<std::string> header = data.u.names();
  header.insert(header.end(), data.y.names().begin(), data.y.names().end());
  TableWriter table(path, header, delimiter);
  std::vector<double> row(header.size());
  for (Eigen::Index k = 0; k < data.length(); ++k) {
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < data.u.channels(); ++i) row[c++] = data.u.values()(k, i);
    for (Eigen::Index i = 0; i < data.y.channels(); ++i) row[c++] = data.y.values()(k, i);
    table.row(row);
  }
}

TableWriter::TableWriter(const std::string& path, std::vector<std::string> header,
                         char delimiter)
    : out_(path, std::ios::trunc), columns_(header.size()), delimiter_(delimiter) {
  if (!out_) throw Error(ErrorCode::kIo, "cannot write " + path);
  row(header);
}

void TableWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  row(cells);
}

void TableWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) {
    throw Error(ErrorCode::kInvalidArgument, "table row has " + std::to_string(cells.size()) +
                                                 " cells, header has " +
                                                 std::to_string(columns_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << delimiter_;
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw Error(ErrorCode::kIo, "table write failed");
}

Scaler Scaler::fit(const Signal& signal) {
  if (signal.length() < 2) {
    throw Error(ErrorCode::kData, "z-score fit needs at least 2 samples");
  }
  Scaler s;
  const Eigen::MatrixXd& v = signal.values();
  s.mean = v.colwise().mean().transpose();
  s.stddev.resize(v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    s.stddev(c) = std::sqrt(variance(v.col(c)));
    if (!(s.stddev(c) > 0.0)) {
      throw Error(ErrorCode::kData,
                  "z-score fit: channel '" + signal.names()[static_cast<std::size_t>(c)] +
                      "' is constant");
    }
  }
  return s;
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& values) const {
  if (values.cols() != mean.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scaler channel count mismatch");
  }
  return ((values.rowwise() - mean.transpose()).array().rowwise() /
          stddev.transpose().array())
      .matrix();
}

Eigen::MatrixXd Scaler::invert(const Eigen::MatrixXd& values) const {
  if (values.cols() != mean.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scaler channel count mismatch");
  }
  return ((values.array().rowwise() * stddev.transpose().array()).rowwise() +
          mean.transpose().array())
      .matrix();
}

Signal Scaler::apply(const Signal& signal) const {
  return Signal(apply(signal.values()), signal.ts(), signal.names());
}

Signal Scaler::invert(const Signal& signal) const {
  return Signal(invert(signal.values()), signal.ts(), signal.names());
}

CtsRun cts_oracle(const Signal& u, const CtsParams& p, const Eigen::Vector2d& x0,
                  double noise_snr_db, std::uint64_t seed) {
  for (double v : {p.k1, p.k2, p.k3, p.k4, p.x_max}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "cts_oracle: non-finite parameter");
  }
  if (p.substeps < 20) {
    throw Error(ErrorCode::kInvalidArgument, "cts_oracle: need at least 20 substeps per sample");
  }
  if (u.channels() != 1) throw Error(ErrorCode::kInvalidArgument, "cts_oracle: single pump input");

  auto field = [&p](const Eigen::Vector2d& x, double pump) {
    const double r1 = std::sqrt(std::max(0.0, x(0)));
    const double r2 = std::sqrt(std::max(0.0, x(1)));
    return Eigen::Vector2d(-p.k1 * r1 + p.k4 * pump, p.k2 * r1 - p.k3 * r2);
  };
  auto clamp = [&p](Eigen::Vector2d x) {
    return Eigen::Vector2d(std::clamp(x(0), 0.0, p.x_max), std::clamp(x(1), 0.0, p.x_max));
  };

  const Eigen::Index k_total = u.length();
  const double h = u.ts() / p.substeps;
  Eigen::MatrixXd states(k_total, 2);
  Eigen::Vector2d x = clamp(x0);
  for (Eigen::Index k = 0; k < k_total; ++k) {
    states.row(k) = x.transpose();
    const double pump = u.values()(k, 0);
    for (int s = 0; s < p.substeps; ++s) {
      const Eigen::Vector2d k1 = field(x, pump);
      const Eigen::Vector2d k2 = field(x + 0.5 * h * k1, pump);
      const Eigen::Vector2d k3 = field(x + 0.5 * h * k2, pump);
      const Eigen::Vector2d k4 = field(x + h * k3, pump);
      x = clamp(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
  }

  Eigen::MatrixXd y = states.col(1);
  double noise_std = 0.0;
  if (std::isfinite(noise_snr_db)) {
    noise_std = std::sqrt(variance(y.col(0)) / std::pow(10.0, noise_snr_db / 10.0));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, noise_std);
    for (Eigen::Index k = 0; k < k_total; ++k) y(k, 0) += normal(rng);
  }
  return {Signal(std::move(y), u.ts(), {"y"}), std::move(states), noise_std};
}

Signal random_steps(Eigen::Index length, double ts, double u_max, int hold_min, int hold_max,
                    std::uint64_t seed) {
  if (length < 1 || hold_min < 1 || hold_max < hold_min) {
    throw Error(ErrorCode::kInvalidArgument, "random_steps: bad length or hold range");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(0.0, u_max);
  std::uniform_int_distribution<int> hold(hold_min, hold_max);
  Eigen::MatrixXd u(length, 1);
  Eigen::Index k = 0;
  while (k < length) {
    const double v = u_max > 0.0 ? level(rng) : 0.0;
    const int n = hold(rng);
    for (int i = 0; i < n && k < length; ++i) u(k++, 0) = v;
  }
  return Signal(std::move(u), ts, {"u"});
}

Splits split_benchmark(const IoData& train, const IoData& test, Eigen::Index val_length) {
  if (val_length < 1 || val_length > test.length()) {
    throw Error(ErrorCode::kInvalidArgument,
                "benchmark split: validation prefix of " + std::to_string(val_length) +
                    " samples exceeds test length " + std::to_string(test.length()));
  }
  return {train, test.slice(0, val_length), test, true};
}

std::vector<IoData> split_ranges(const IoData& data, const std::vector<Range>& ranges) {
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const Range& r = ranges[i];
    if (r.begin < 0 || r.end > data.length() || r.begin >= r.end) {
      throw Error(ErrorCode::kInvalidArgument,
                  "split range [" + std::to_string(r.begin) + ", " + std::to_string(r.end) +
                      ") invalid for data of length " + std::to_string(data.length()));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (r.begin < ranges[j].end && ranges[j].begin < r.end) {
        throw Error(ErrorCode::kInvalidArgument, "split ranges overlap");
      }
    }
  }
  std::vector<IoData> out;
  for (const Range& r : ranges) out.push_back(data.slice(r.begin, r.end));
  return out;
}

Splits split_fractions(const IoData& data, double train, double val, double test) {
  if (train <= 0.0 || val <= 0.0 || test <= 0.0 || train + val + test > 1.0 + 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "split fractions must be positive and sum to <= 1");
  }
  const auto k = static_cast<double>(data.length());
  const auto n_train = static_cast<Eigen::Index>(std::llround(train * k));
  const auto n_val = static_cast<Eigen::Index>(std::llround(val * k));
  const auto n_test = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::llround(test * k)),
                                             data.length() - n_train - n_val);
  auto parts = split_ranges(data, {{0, n_train},
                                   {n_train, n_train + n_val},
                                   {n_train + n_val, n_train + n_val + n_test}});
  return {parts[0], parts[1], parts[2], false};
}

}  // namespace sdnid::data
