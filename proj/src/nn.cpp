#include "nn.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "error.hpp"

namespace sdnid::nn {
namespace {

struct Builder {
  ModelParams& p;

  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols, bool bias) {
    p.tensors.push_back(Tensor{std::move(name), Eigen::MatrixXd::Zero(rows, cols), bias});
    return p.tensors.size() - 1;
  }

  MlpIndex mlp(const std::string& prefix, const std::vector<std::pair<std::string, int>>& linear,
               int in_dim, int out_dim, int hidden, int depth, bool out_bias) {
    MlpIndex idx;
    for (const auto& [name, cols] : linear) {
      idx.linear.push_back(add(prefix + "." + name, out_dim, cols, false));
    }
    idx.weights.push_back(add(prefix + ".W_in", hidden, in_dim, false));
    idx.biases.push_back(add(prefix + ".b_in", hidden, 1, true));
    for (int k = 1; k < depth; ++k) {
      idx.weights.push_back(add(prefix + ".W_h" + std::to_string(k), hidden, hidden, false));
      idx.biases.push_back(add(prefix + ".b_h" + std::to_string(k), hidden, 1, true));
    }
    idx.weights.push_back(add(prefix + ".W_out", out_dim, hidden, false));
    if (out_bias) idx.out_bias = add(prefix + ".b_out", out_dim, 1, true);
    return idx;
  }
};

void require_dim(const char* what, Eigen::Index got, int want) {
  if (got != want) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": expected dimension " +
                                               std::to_string(want) + ", got " +
                                               std::to_string(got));
  }
}

}  // namespace

Dims dims_from(const RunConfig& config, int nu, int ny) {
  Dims d;
  d.nx = config.nx;
  d.nu = nu;
  d.ny = ny;
  d.na = config.na;
  d.nb = config.nb;
  d.hidden = config.hidden;
  d.depth = config.depth;
  d.output_uses_input = config.output_uses_input;
  d.tau_kind = config.tau_kind;
  return d;
}

std::optional<std::size_t> ModelParams::find(const std::string& name) const {
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name == name) return i;
  }
  return std::nullopt;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors) {
    if (!t.value.allFinite()) return false;
  }
  return true;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.value.size());
  return n;
}

ModelParams init_params(const Dims& dims, double ts, double tau_init_ratio,
                        std::uint64_t seed) {
  if (dims.nx < 1 || dims.nu < 1 || dims.ny < 1 || dims.na < 1 || dims.nb < 1 ||
      dims.hidden < 1 || dims.depth < 1) {
    throw Error(ErrorCode::kInvalidArgument, "init_params: dimensions must be positive");
  }
  if (!(ts > 0.0) || !(tau_init_ratio > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "init_params: ts and tau_init_ratio must be > 0");
  }
  ModelParams p;
  p.dims = dims;
  Builder b{p};
  const int xu = dims.nx + dims.nu;
  p.f = b.mlp("f", {{"A", dims.nx}, {"B", dims.nu}}, xu, dims.nx, dims.hidden, dims.depth, false);
  if (dims.output_uses_input) {
    p.g = b.mlp("g", {{"C", dims.nx}, {"D", dims.nu}}, xu, dims.ny, dims.hidden, dims.depth, false);
  } else {
    p.g = b.mlp("g", {{"C", dims.nx}}, dims.nx, dims.ny, dims.hidden, dims.depth, false);
  }
  p.e = b.mlp("e", {{"L", dims.window()}}, dims.window(), dims.nx, dims.hidden, dims.depth, false);
  p.d = b.mlp("d", {}, xu, 1, dims.hidden, dims.depth, true);
  const Eigen::Index tau_rows = dims.tau_kind == TauKind::kVector ? dims.nx : 1;
  p.tau = b.add("tau", tau_rows, 1, false);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-kInitRange, kInitRange);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    if (i == p.tau || p.tensors[i].bias) continue;
    for (Eigen::Index k = 0; k < p.tensors[i].value.size(); ++k) {
      p.tensors[i].value.data()[k] = uniform(rng);
    }
  }
  p.at(p.tau).setConstant(ts / tau_init_ratio);
  return p;
}

ModelParams init_params(const RunConfig& config, int nu, int ny) {
  return init_params(dims_from(config, nu, ny), config.ts, config.tau_init_ratio, config.seed);
}

void zero_params(ModelParams& params) {
  for (auto& t : params.tensors) t.value.setZero();
}

ModelGraph::ModelGraph(ad::Tape& tape, const ModelParams& params, bool trainable,
                       bool tau_trainable)
    : tape_(tape), params_(params) {
  vars_.reserve(params.tensors.size());
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const bool train = (i == params.tau) ? tau_trainable : trainable;
    vars_.push_back(tape.leaf(params.tensors[i].value, train));
  }
}

ad::Var ModelGraph::mlp(const MlpIndex& index, const std::vector<ad::Var>& blocks) const {
  ad::Var input = blocks.front();
  for (std::size_t i = 1; i < blocks.size(); ++i) input = tape_.concat(input, blocks[i]);

  ad::Var h = input;
  for (std::size_t k = 0; k + 1 < index.weights.size(); ++k) {
    h = tape_.matmul(vars_[index.weights[k]], h);
    h = tape_.add_bias(h, vars_[index.biases[k]]);
    h = tape_.leaky_relu(h, kLeakySlope);
  }
  ad::Var out = tape_.matmul(vars_[index.weights.back()], h);
  for (std::size_t i = 0; i < index.linear.size(); ++i) {
    out = tape_.add(out, tape_.matmul(vars_[index.linear[i]], blocks.at(i)));
  }
  if (index.out_bias) out = tape_.add_bias(out, vars_[*index.out_bias]);
  return out;
}

ad::Var ModelGraph::f(ad::Var x, ad::Var u) const { return mlp(params_.f, {x, u}); }

ad::Var ModelGraph::g(ad::Var x, ad::Var u) const {
  if (params_.dims.output_uses_input) return mlp(params_.g, {x, u});
  return mlp(params_.g, {x});
}

ad::Var ModelGraph::d(ad::Var x, ad::Var u) const { return mlp(params_.d, {x, u}); }

ad::Var ModelGraph::encode(ad::Var window) const { return mlp(params_.e, {window}); }

ad::Var ModelGraph::effective_tau(double eps) const {
  return tape_.clamp_min(vars_[params_.tau], eps);
}

Eigen::VectorXd lag_window(const Eigen::MatrixXd& u, const Eigen::MatrixXd& y,
                           Eigen::Index k, int na, int nb) {
  if (k < na || k < nb || k > u.rows() || k > y.rows()) {
    throw Error(ErrorCode::kInvalidArgument,
                "lag_window: start index " + std::to_string(k) + " lacks history");
  }
  const Eigen::Index nu = u.cols();
  const Eigen::Index ny = y.cols();
  Eigen::VectorXd w(nb * nu + na * ny);
  Eigen::Index pos = 0;
  for (int i = 1; i <= nb; ++i, pos += nu) w.segment(pos, nu) = u.row(k - i).transpose();
  for (int i = 1; i <= na; ++i, pos += ny) w.segment(pos, ny) = y.row(k - i).transpose();
  return w;
}

Eigen::VectorXd f_forward(const ModelParams& params, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u) {
  require_dim("f_forward state", x.size(), params.dims.nx);
  require_dim("f_forward input", u.size(), params.dims.nu);
  ad::Tape tape;
  ModelGraph graph(tape, params, false, false);
  return tape.value(graph.f(tape.constant(x), tape.constant(u)));
}

Eigen::VectorXd g_forward(const ModelParams& params, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u) {
  require_dim("g_forward state", x.size(), params.dims.nx);
  require_dim("g_forward input", u.size(), params.dims.nu);
  ad::Tape tape;
  ModelGraph graph(tape, params, false, false);
  return tape.value(graph.g(tape.constant(x), tape.constant(u)));
}

double d_forward(const ModelParams& params, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  require_dim("d_forward state", x.size(), params.dims.nx);
  require_dim("d_forward input", u.size(), params.dims.nu);
  ad::Tape tape;
  ModelGraph graph(tape, params, false, false);
  return tape.scalar_value(graph.d(tape.constant(x), tape.constant(u)));
}

Eigen::VectorXd encode(const ModelParams& params, const Eigen::MatrixXd& u_history,
                       const Eigen::MatrixXd& y_history) {
  const Dims& dm = params.dims;
  if (u_history.rows() < dm.nb || y_history.rows() < dm.na) {
    throw Error(ErrorCode::kInvalidArgument, "encode: window shorter than the lag orders");
  }
  require_dim("encode input channels", u_history.cols(), dm.nu);
  require_dim("encode output channels", y_history.cols(), dm.ny);
  const Eigen::Index lag = std::max<Eigen::Index>(dm.na, dm.nb);
  // Pad the shorter history so both end at k - 1; padded rows are never read.
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(lag, dm.nu);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(lag, dm.ny);
  u.bottomRows(dm.nb) = u_history.bottomRows(dm.nb);
  y.bottomRows(dm.na) = y_history.bottomRows(dm.na);
  ad::Tape tape;
  ModelGraph graph(tape, params, false, false);
  return tape.value(graph.encode(tape.constant(lag_window(u, y, lag, dm.na, dm.nb))));
}

}  // namespace sdnid::nn
