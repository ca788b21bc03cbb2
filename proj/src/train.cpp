#include "train.hpp"

#include <cmath>
#include <string>

#include "autodiff.hpp"
#include "error.hpp"
#include "ode.hpp"

namespace sdnid::train {

Prepared prepare(const data::IoData& data, const data::Scaler& u_scaler,
                 const data::Scaler& y_scaler) {
  Prepared p;
  p.u = u_scaler.apply(data.u.values());
  p.y = y_scaler.apply(data.y.values());
  p.y_raw = data.y.values();
  p.ts = data.u.ts();
  return p;
}

std::vector<Eigen::Index> sample_starts(Eigen::Index length, int seq_len, int lag, int batch,
                                        std::mt19937_64& rng) {
  if (batch < 1) throw Error(ErrorCode::kInvalidArgument, "batch must be >= 1");
  if (seq_len < 1) throw Error(ErrorCode::kInvalidArgument, "seq_len must be >= 1");
  const Eigen::Index first = lag;
  const Eigen::Index last = length - seq_len;
  if (last < first) {
    throw Error(ErrorCode::kInvalidArgument,
                "seq_len " + std::to_string(seq_len) + " plus lag " + std::to_string(lag) +
                    " exceeds the data length " + std::to_string(length));
  }
  const Eigen::Index count = last - first + 1;
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) pool[static_cast<std::size_t>(i)] = first + i;
  if (count <= batch) return pool;
  // Partial Fisher-Yates.
  for (int i = 0; i < batch; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, count - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(batch));
  return pool;
}

LossOptions LossOptions::from(const RunConfig& config, bool tau_trainable) {
  LossOptions o;
  o.seq_len = config.seq_len;
  o.lambda_n = config.lambda_n;
  o.lambda_d = config.lambda_d;
  o.weight_decay = config.weight_decay;
  o.ts = config.ts;
  o.tau_epsilon = config.tau_epsilon();
  o.substeps = config.substeps;
  o.divergence_limit = config.divergence_limit;
  o.tau_trainable = tau_trainable;
  return o;
}

LossResult loss(const nn::ModelParams& params, const Prepared& data,
                const std::vector<Eigen::Index>& starts, const LossOptions& options, long step) {
  const nn::Dims& dims = params.dims;
  if (starts.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  if (data.u.cols() != dims.nu || data.y.cols() != dims.ny) {
    throw Error(ErrorCode::kShapeMismatch, "data channels do not match the model");
  }
  const int lag = dims.lag();
  const int seq = options.seq_len;
  const auto batch = static_cast<Eigen::Index>(starts.size());
  for (const Eigen::Index k : starts) {
    if (k < lag || k + seq > data.length()) {
      throw Error(ErrorCode::kInvalidArgument, "batch start " + std::to_string(k) +
                                                   " outside the admissible range");
    }
  }

  LossResult result;
  result.grads.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    result.grads.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
  }

  ad::Tape tape;
  const nn::ModelGraph graph(tape, params, true, options.tau_trainable);

  Eigen::MatrixXd window(dims.window(), batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    window.col(b) = nn::lag_window(data.u, data.y, starts[static_cast<std::size_t>(b)], dims.na,
                                   dims.nb);
  }
  const ad::Var tau = graph.effective_tau(options.tau_epsilon);
  const ad::Var dt = tape.divide_into(options.ts / options.substeps, tau);
  const ode::TapedField field = [&graph](ad::Var x, ad::Var u) { return graph.f(x, u); };

  ad::Var x = graph.encode(tape.constant(window));
  ad::Var sim;
  ad::Var con;
  Eigen::MatrixXd uj(dims.nu, batch);
  Eigen::MatrixXd yj(dims.ny, batch);
  try {
    for (int j = 0; j < seq; ++j) {
      for (Eigen::Index b = 0; b < batch; ++b) {
        const Eigen::Index k = starts[static_cast<std::size_t>(b)] + j;
        uj.col(b) = data.u.row(k).transpose();
        yj.col(b) = data.y.row(k).transpose();
      }
      const ad::Var u = tape.constant(uj);
      const ad::Var err = tape.sub(graph.g(x, u), tape.constant(yj));
      const ad::Var e2 = tape.sum(tape.square(err));
      sim = sim.valid() ? tape.add(sim, e2) : e2;
      if (options.lambda_d != 0.0) {
        const ad::Var d2 = tape.sum(tape.square(graph.d(x, u)));
        con = con.valid() ? tape.add(con, d2) : d2;
      }
      if (j + 1 < seq) {
        x = ode::rk4_step(tape, field, x, u, dt, options.substeps, options.divergence_limit,
                          step);
      }
    }
  } catch (const DivergenceError&) {
    result.diverged = true;
    return result;
  }

  const double inv_batch = 1.0 / static_cast<double>(batch);
  sim = tape.scale(sim, inv_batch);
  ad::Var total = sim;
  if (con.valid()) {
    con = tape.scale(con, options.lambda_d * inv_batch);
    total = tape.add(total, con);
  }
  const ad::Var barrier = tape.sylvester_barrier(graph.var(params.f.linear.at(0)),
                                                 options.lambda_n);
  total = tape.add(total, barrier);

  result.parts.simulation = tape.scalar_value(sim);
  result.parts.constraint = con.valid() ? tape.scalar_value(con) : 0.0;
  result.parts.barrier = tape.scalar_value(barrier);

  double weight = 0.0;
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (i == params.tau) continue;
    weight += params.at(i).squaredNorm();
  }
  result.parts.weight = options.weight_decay * weight;
  result.parts.total = tape.scalar_value(total) + result.parts.weight;
  if (!std::isfinite(result.parts.total)) return result;

  const ad::Gradients g = tape.backward(total);
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const ad::Var v = graph.var(i);
    if (!tape.is_trainable(v)) continue;
    result.grads[i] = g[v];
    if (i != params.tau) result.grads[i] += 2.0 * options.weight_decay * params.at(i);
    if (!result.grads[i].allFinite()) return result;
  }
  result.finite = true;
  return result;
}

double barrier_ln(const Eigen::MatrixXd& a, double lambda) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::kShapeMismatch, "barrier needs a square A");
  const std::vector<double> minors = ad::leading_minors(a);
  double acc = 0.0;
  for (std::size_t i = 0; i < minors.size(); ++i) {
    // One-based minor index i + 1: a negative definite S has (-1)^(i+1) det <= 0.
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    const double h = std::max(0.0, sign * minors[i]);
    acc += h * h;
  }
  return lambda * acc;
}

Adam::Adam(const nn::ModelParams& params) {
  for (const auto& t : params.tensors) {
    m_.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
  }
}

bool Adam::step(nn::ModelParams& params, const std::vector<Eigen::MatrixXd>& grads, double lr) {
  if (grads.size() != params.tensors.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient count does not match the parameters");
  }
  for (const auto& g : grads) {
    if (!g.allFinite()) return false;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i].cwiseAbs2();
    const Eigen::ArrayXXd mhat = m_[i].array() / c1;
    const Eigen::ArrayXXd vhat = v_[i].array() / c2;
    params.at(i).array() -= lr * mhat / (vhat.sqrt() + kEps);
  }
  return true;
}

Eigen::MatrixXd simulate(const nn::ModelParams& params, const Eigen::MatrixXd& u,
                         const Eigen::MatrixXd& y, double ts, double tau_epsilon, int substeps,
                         double divergence_limit) {
  const int lag = params.dims.lag();
  const Eigen::Index k_total = u.rows();
  if (y.rows() != k_total) throw Error(ErrorCode::kShapeMismatch, "u and y lengths differ");
  if (k_total <= lag) {
    throw Error(ErrorCode::kData, "record of " + std::to_string(k_total) +
                                      " samples is not longer than the encoder lag");
  }
  ode::StepSpec spec;
  spec.h = ts;
  spec.tau = params.raw_tau().reshaped().cwiseMax(tau_epsilon);
  spec.substeps = substeps;
  spec.divergence_limit = divergence_limit;
  spec.validate();

  const ode::Field field = [&params](const Eigen::VectorXd& x, const Eigen::VectorXd& uk) {
    return nn::f_forward(params, x, uk);
  };
  Eigen::VectorXd x = nn::encode(params, u.topRows(lag), y.topRows(lag));
  Eigen::MatrixXd out(k_total - lag, params.dims.ny);
  for (Eigen::Index k = lag; k < k_total; ++k) {
    const Eigen::VectorXd uk = u.row(k).transpose();
    out.row(k - lag) = nn::g_forward(params, x, uk).transpose();
    if (k + 1 < k_total) x = ode::rk4_step(field, x, uk, spec, static_cast<long>(k));
  }
  return out;
}

double rmse(const Eigen::MatrixXd& y, const Eigen::MatrixXd& yhat, Eigen::Index skip) {
  if (y.rows() != yhat.rows() || y.cols() != yhat.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "rmse: shapes differ");
  }
  if (skip < 0 || skip >= y.rows()) throw Error(ErrorCode::kInvalidArgument, "rmse: empty range");
  const Eigen::Index n = y.rows() - skip;
  const double sq = (y.bottomRows(n) - yhat.bottomRows(n)).squaredNorm();
  return std::sqrt(sq / static_cast<double>(n));
}

double rmse(const Signal& y, const Signal& yhat, Eigen::Index skip) {
  return rmse(y.values(), yhat.values(), skip);
}

Evaluation evaluate(const nn::ModelParams& params, const Prepared& data,
                    const data::Scaler& y_scaler, const RunConfig& config) {
  Evaluation ev;
  try {
    const Eigen::MatrixXd scaled = simulate(params, data.u, data.y, data.ts,
                                            config.tau_epsilon(), config.substeps,
                                            config.divergence_limit);
    ev.prediction = y_scaler.invert(scaled);
  } catch (const DivergenceError&) {
    ev.diverged = true;
    return ev;
  }
  if (!ev.prediction.allFinite()) {
    ev.diverged = true;
    return ev;
  }
  const Eigen::Index lag = params.dims.lag();
  ev.rmse = rmse(data.y_raw.bottomRows(data.length() - lag), ev.prediction, 0);
  return ev;
}

Eigen::VectorXd effective_ratio(const nn::ModelParams& params, double ts, double tau_epsilon) {
  const Eigen::VectorXd tau = params.raw_tau().reshaped().cwiseMax(tau_epsilon);
  return tau.cwiseInverse() * ts;
}

std::vector<std::string> history_header(int tau_entries) {
  std::vector<std::string> h{"step",       "lr",      "loss",    "simulation", "constraint",
                             "barrier",    "weight",  "val_rmse", "skipped",    "skipped_total"};
  for (int i = 0; i < tau_entries; ++i) h.push_back("ratio_" + std::to_string(i));
  return h;
}

std::vector<double> history_values(const HistoryRow& row) {
  std::vector<double> v{static_cast<double>(row.step),
                        row.lr,
                        row.parts.total,
                        row.parts.simulation,
                        row.parts.constraint,
                        row.parts.barrier,
                        row.parts.weight,
                        row.val_rmse,
                        row.skipped ? 1.0 : 0.0,
                        static_cast<double>(row.skipped_total)};
  for (Eigen::Index i = 0; i < row.ratio.size(); ++i) v.push_back(row.ratio(i));
  return v;
}

FitResult fit(const nn::ModelParams& init, const Prepared& train, const Prepared& val,
              const data::Scaler& y_scaler, const RunConfig& config, bool tau_trainable,
              const HistoryCallback& on_row) {
  config.validate();
  if (val.length() <= init.dims.lag()) {
    throw Error(ErrorCode::kData, "validation split is shorter than the encoder lag");
  }
  FitResult result;
  result.best = init;
  result.last = init;
  if (config.max_steps <= 0) return result;

  const LossOptions options = LossOptions::from(config, tau_trainable);
  const int lag = init.dims.lag();
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Adam adam(init);
  nn::ModelParams& params = result.last;

  result.best_val_rmse = evaluate(params, val, y_scaler, config).rmse;
  result.best_step = 0;

  for (long step = 0; step < config.max_steps; ++step) {
    HistoryRow row;
    row.step = step;
    row.lr = config.learning_rate(step);
    const std::vector<Eigen::Index> starts =
        sample_starts(train.length(), config.seq_len, lag, config.batch, rng);
    const LossResult lr = loss(params, train, starts, options, step);
    row.parts = lr.parts;
    if (lr.diverged || !lr.finite || !adam.step(params, lr.grads, row.lr)) {
      row.skipped = true;
      ++result.skipped;
    }
    row.skipped_total = result.skipped;
    result.steps_run = step + 1;

    const bool last = step + 1 == config.max_steps;
    if ((step + 1) % config.val_interval == 0 || last) {
      row.val_rmse = evaluate(params, val, y_scaler, config).rmse;
      if (row.val_rmse < result.best_val_rmse) {
        result.best_val_rmse = row.val_rmse;
        result.best = params;
        result.best_step = step + 1;
      }
    }
    row.ratio = effective_ratio(params, config.ts, config.tau_epsilon());
    if (on_row) on_row(row);
    result.history.push_back(std::move(row));

    if (step + 1 - result.best_step >= config.patience) {
      result.early_stopped = true;
      break;
    }
  }

  if (result.skipped == result.steps_run) {
    throw Error(ErrorCode::kTrainingFailed,
                "every one of " + std::to_string(result.steps_run) +
                    " optimization steps diverged or produced non-finite gradients (T_s/tau = " +
                    data::format_number(effective_ratio(init, config.ts, config.tau_epsilon())
                                            .mean()) +
                    ")");
  }
  return result;
}

}  // namespace sdnid::train
