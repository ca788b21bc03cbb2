#pragma once

// Truncated simulation error minimization: batches of length-J subsequences,
// each started from the encoder state and rolled out with RK4 on (1/tau) f.

#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "config.hpp"
#include "data.hpp"
#include "nn.hpp"

namespace sdnid::train {

// Z-scored channels of one split plus the raw outputs for RMSE in original units.
struct Prepared {
  Eigen::MatrixXd u;      // K x nu, scaled
  Eigen::MatrixXd y;      // K x ny, scaled
  Eigen::MatrixXd y_raw;  // K x ny
  double ts = 1.0;

  Eigen::Index length() const { return u.rows(); }
};

Prepared prepare(const data::IoData& data, const data::Scaler& u_scaler,
                 const data::Scaler& y_scaler);

// Start indices k in [lag, K - J], drawn uniformly without replacement. All
// admissible indices are returned (ascending) when there are no more than
// `batch` of them.
std::vector<Eigen::Index> sample_starts(Eigen::Index length, int seq_len, int lag, int batch,
                                        std::mt19937_64& rng);

struct LossOptions {
  int seq_len = 128;
  double lambda_n = 1e12;
  double lambda_d = 1e3;
  double weight_decay = 1e-8;
  double ts = 1.0;
  double tau_epsilon = 1e-6;
  int substeps = 1;
  double divergence_limit = 1e9;
  bool tau_trainable = false;

  static LossOptions from(const RunConfig& config, bool tau_trainable);
};

struct LossParts {
  double total = std::numeric_limits<double>::quiet_NaN();
  double simulation = 0.0;  // mean over the batch of sum_j ||y - yhat||^2
  double constraint = 0.0;  // mean over the batch of lambda_d sum_j d^2
  double barrier = 0.0;     // L_N
  double weight = 0.0;      // L_W
};

struct LossResult {
  LossParts parts;
  // One entry per ModelParams tensor. Non-trainable tensors get zeros.
  std::vector<Eigen::MatrixXd> grads;
  bool diverged = false;
  bool finite = false;
};

LossResult loss(const nn::ModelParams& params, const Prepared& data,
                const std::vector<Eigen::Index>& starts, const LossOptions& options,
                long step = 0);

// lambda * sum_i relu((-1)^(i+1) det S_1..i)^2, S = (A + A^T) / 2.
double barrier_ln(const Eigen::MatrixXd& a, double lambda);

class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit Adam(const nn::ModelParams& params);

  // Returns false (and leaves everything untouched) if any gradient entry is
  // non-finite.
  bool step(nn::ModelParams& params, const std::vector<Eigen::MatrixXd>& grads, double lr);
  long count() const { return t_; }

 private:
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

// Free-run simulation: the encoder runs once on samples [0, lag), then the
// model is driven by the inputs alone. Returns (K - lag) x ny scaled outputs
// for samples lag .. K-1. Throws DivergenceError.
Eigen::MatrixXd simulate(const nn::ModelParams& params, const Eigen::MatrixXd& u,
                         const Eigen::MatrixXd& y, double ts, double tau_epsilon,
                         int substeps = 1, double divergence_limit = 1e9);

// sqrt of the mean over rows skip .. K-1 of ||y_k - yhat_k||^2.
double rmse(const Eigen::MatrixXd& y, const Eigen::MatrixXd& yhat, Eigen::Index skip);
double rmse(const Signal& y, const Signal& yhat, Eigen::Index skip);

struct Evaluation {
  Eigen::MatrixXd prediction;  // (K - lag) x ny, original units
  double rmse = std::numeric_limits<double>::infinity();
  bool diverged = false;
};

Evaluation evaluate(const nn::ModelParams& params, const Prepared& data,
                    const data::Scaler& y_scaler, const RunConfig& config);

struct HistoryRow {
  long step = 0;
  double lr = 0.0;
  LossParts parts;
  double val_rmse = std::numeric_limits<double>::quiet_NaN();
  bool skipped = false;
  long skipped_total = 0;
  Eigen::VectorXd ratio;  // effective T_s / tau per entry
};

std::vector<std::string> history_header(int tau_entries);
std::vector<double> history_values(const HistoryRow& row);

struct FitResult {
  nn::ModelParams best;
  nn::ModelParams last;
  std::vector<HistoryRow> history;
  double best_val_rmse = std::numeric_limits<double>::infinity();
  long best_step = 0;
  long steps_run = 0;
  long skipped = 0;
  bool early_stopped = false;
};

using HistoryCallback = std::function<void(const HistoryRow&)>;

// Throws kTrainingFailed when every step was skipped.
FitResult fit(const nn::ModelParams& init, const Prepared& train, const Prepared& val,
              const data::Scaler& y_scaler, const RunConfig& config, bool tau_trainable,
              const HistoryCallback& on_row = {});

Eigen::VectorXd effective_ratio(const nn::ModelParams& params, double ts, double tau_epsilon);

}  // namespace sdnid::train
