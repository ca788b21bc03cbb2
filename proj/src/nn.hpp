#pragma once

// Residual MLP networks of the continuous-time model:
//   f(x, u) = A x + B u + W_out s(... s(W_in [x; u] + b_in) ...)
//   g(x, u) = C x + D u + (same shape)
//   e(window) = L window + (same shape)         initial-state encoder
//   d(x, u) = (same shape) + b_out              constraint network, scalar
// s is LeakyReLU with slope 0.01. All weights are drawn from U[-0.01, 0.01];
// every bias starts at zero.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "autodiff.hpp"
#include "config.hpp"

namespace sdnid::nn {

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kInitRange = 0.01;

struct Dims {
  int nx = 4;
  int nu = 1;
  int ny = 1;
  int na = 5;
  int nb = 5;
  int hidden = 64;
  int depth = 2;
  bool output_uses_input = true;
  TauKind tau_kind = TauKind::kVector;

  int window() const { return na * ny + nb * nu; }
  int lag() const { return na > nb ? na : nb; }
};

Dims dims_from(const RunConfig& config, int nu, int ny);

struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  bool bias = false;
};

// Indices into ModelParams::tensors for one residual MLP.
struct MlpIndex {
  std::vector<std::size_t> linear;   // one per input block, may be empty
  std::vector<std::size_t> weights;  // input layer first, output layer last
  std::vector<std::size_t> biases;   // one per hidden layer
  std::optional<std::size_t> out_bias;
};

struct ModelParams {
  Dims dims;
  std::vector<Tensor> tensors;
  MlpIndex f, g, e, d;
  std::size_t tau = 0;  // raw (unclamped) normalization, seconds

  const Eigen::MatrixXd& at(std::size_t i) const { return tensors.at(i).value; }
  Eigen::MatrixXd& at(std::size_t i) { return tensors.at(i).value; }
  const Eigen::MatrixXd& A() const { return at(f.linear.at(0)); }
  Eigen::MatrixXd& A() { return at(f.linear.at(0)); }
  const Eigen::MatrixXd& raw_tau() const { return at(tau); }

  std::optional<std::size_t> find(const std::string& name) const;
  bool all_finite() const;
  std::size_t parameter_count() const;
};

// Allocates the layout for `dims`, weights U[-0.01, 0.01], biases 0, and raw
// tau = ts / tau_init_ratio.
ModelParams init_params(const Dims& dims, double ts, double tau_init_ratio,
                        std::uint64_t seed);
ModelParams init_params(const RunConfig& config, int nu, int ny);

// Zeroes every tensor. Handy for building hand-specified models.
void zero_params(ModelParams& params);

// Binds a ModelParams onto a tape and evaluates the networks on column
// batches. Network tensors become trainable leaves when `trainable` is set;
// tau only when `tau_trainable` is.
class ModelGraph {
 public:
  ModelGraph(ad::Tape& tape, const ModelParams& params, bool trainable, bool tau_trainable);

  ad::Var f(ad::Var x, ad::Var u) const;
  ad::Var g(ad::Var x, ad::Var u) const;
  ad::Var d(ad::Var x, ad::Var u) const;
  ad::Var encode(ad::Var window) const;

  // max(eps, raw tau), (n_x x 1) for the vector kind, (1 x 1) for scalar.
  ad::Var effective_tau(double eps) const;
  ad::Var var(std::size_t tensor) const { return vars_.at(tensor); }
  const std::vector<ad::Var>& vars() const { return vars_; }
  ad::Tape& tape() const { return tape_; }

 private:
  ad::Var mlp(const MlpIndex& index, const std::vector<ad::Var>& blocks) const;

  ad::Tape& tape_;
  const ModelParams& params_;
  std::vector<ad::Var> vars_;
};

// Encoder input for start index k: [u_{k-1}; ...; u_{k-nb}; y_{k-1}; ...; y_{k-na}].
// Rows of `u`/`y` are samples. Requires k >= max(na, nb).
Eigen::VectorXd lag_window(const Eigen::MatrixXd& u, const Eigen::MatrixXd& y,
                           Eigen::Index k, int na, int nb);

Eigen::VectorXd f_forward(const ModelParams& params, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u);
Eigen::VectorXd g_forward(const ModelParams& params, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u);
double d_forward(const ModelParams& params, const Eigen::VectorXd& x, const Eigen::VectorXd& u);
// `u_history`/`y_history` are chronological (last row = most recent sample
// k-1). Only the final nb / na rows are used.
Eigen::VectorXd encode(const ModelParams& params, const Eigen::MatrixXd& u_history,
                       const Eigen::MatrixXd& y_history);

}  // namespace sdnid::nn
