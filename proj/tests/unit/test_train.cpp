#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "error.hpp"
#include "ode.hpp"
#include "train.hpp"

namespace sdnid::train {
namespace {

nn::Dims small_dims() {
  nn::Dims d;
  d.nx = 2;
  d.na = 2;
  d.nb = 3;
  d.hidden = 4;
  d.depth = 2;
  return d;
}

nn::ModelParams random_params(const nn::Dims& dims, double ts, std::uint64_t seed) {
  nn::ModelParams p = nn::init_params(dims, ts, 0.5, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> ud(-0.4, 0.4);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    if (i == p.tau) continue;
    for (Eigen::Index k = 0; k < p.at(i).size(); ++k) p.at(i).data()[k] = ud(rng);
  }
  p.A() -= Eigen::MatrixXd::Identity(dims.nx, dims.nx);
  return p;
}

Prepared toy_data(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Prepared p;
  p.ts = 0.5;
  p.u.resize(n, 1);
  p.y.resize(n, 1);
  double x = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    p.u(k, 0) = (k / 7) % 2 == 0 ? 1.0 : -1.0;
    p.y(k, 0) = x + 0.01 * nd(rng);
    x = 0.8 * x + 0.2 * p.u(k, 0);
  }
  p.y_raw = p.y;
  return p;
}

// Loop oracle: plain forward functions and the plain RK4 step.
LossParts oracle_loss(const nn::ModelParams& params, const Prepared& data,
                      const std::vector<Eigen::Index>& starts, const LossOptions& o) {
  const nn::Dims& d = params.dims;
  ode::StepSpec spec;
  spec.h = o.ts;
  spec.tau = params.raw_tau().reshaped().cwiseMax(o.tau_epsilon);
  spec.substeps = o.substeps;
  const ode::Field f = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return nn::f_forward(params, x, u);
  };
  LossParts parts;
  for (const Eigen::Index k : starts) {
    Eigen::VectorXd x = nn::encode(params, data.u.middleRows(k - d.lag(), d.lag()),
                                   data.y.middleRows(k - d.lag(), d.lag()));
    for (int j = 0; j < o.seq_len; ++j) {
      const Eigen::VectorXd u = data.u.row(k + j).transpose();
      parts.simulation += (nn::g_forward(params, x, u) - data.y.row(k + j).transpose()).squaredNorm();
      const double dv = nn::d_forward(params, x, u);
      parts.constraint += o.lambda_d * dv * dv;
      x = ode::rk4_step(f, x, u, spec);
    }
  }
  parts.simulation /= static_cast<double>(starts.size());
  parts.constraint /= static_cast<double>(starts.size());
  parts.barrier = barrier_ln(params.A(), o.lambda_n);
  double w = 0.0;
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (i != params.tau) w += params.at(i).squaredNorm();
  }
  parts.weight = o.weight_decay * w;
  parts.total = parts.simulation + parts.constraint + parts.barrier + parts.weight;
  return parts;
}

LossOptions small_options() {
  LossOptions o;
  o.seq_len = 6;
  o.lambda_d = 0.7;
  o.lambda_n = 3.0;
  o.weight_decay = 1e-3;
  o.ts = 0.5;
  o.tau_trainable = true;
  return o;
}

TEST(SampleStarts, RangeDistinctAndCount) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const auto s = sample_starts(100, 10, 5, 20, rng);
    ASSERT_EQ(s.size(), 20u);
    EXPECT_EQ(std::set<Eigen::Index>(s.begin(), s.end()).size(), 20u);
    for (auto k : s) {
      EXPECT_GE(k, 5);
      EXPECT_LE(k, 90);
    }
  }
}

TEST(SampleStarts, ReturnsAllWhenBatchCoversRange) {
  std::mt19937_64 rng(4);
  const auto s = sample_starts(20, 10, 5, 64, rng);
  ASSERT_EQ(s.size(), 6u);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i], static_cast<Eigen::Index>(5 + i));
}

TEST(SampleStarts, CoversEveryIndexUniformly) {
  std::mt19937_64 rng(9);
  std::vector<int> hits(11, 0);
  for (int rep = 0; rep < 20000; ++rep) {
    for (auto k : sample_starts(20, 5, 5, 3, rng)) ++hits[static_cast<std::size_t>(k - 5)];
  }
  for (int h : hits) EXPECT_NEAR(h, 20000 * 3 / 11.0, 300);
}

TEST(SampleStarts, Errors) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_starts(10, 8, 5, 2, rng), Error);
  EXPECT_THROW(sample_starts(100, 8, 5, 0, rng), Error);
  EXPECT_THROW(sample_starts(100, 0, 5, 2, rng), Error);
}

TEST(Barrier, IndependentMinors) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 30; ++rep) {
    Eigen::MatrixXd a(3, 3);
    for (Eigen::Index i = 0; i < 9; ++i) a.data()[i] = nd(rng);
    const Eigen::MatrixXd s = 0.5 * (a + a.transpose());
    double expect = 0.0;
    for (int n = 1; n <= 3; ++n) {
      const double det = s.topLeftCorner(n, n).determinant();
      const double h = std::max(0.0, (n % 2 == 1 ? 1.0 : -1.0) * det);
      expect += h * h;
    }
    EXPECT_NEAR(barrier_ln(a, 2.5), 2.5 * expect, 1e-12 * (1.0 + expect));
  }
  EXPECT_EQ(barrier_ln(-Eigen::MatrixXd::Identity(4, 4), 1e12), 0.0);
  EXPECT_THROW(barrier_ln(Eigen::MatrixXd::Zero(2, 3), 1.0), Error);
}

TEST(Loss, MatchesLoopOracle) {
  const nn::Dims dims = small_dims();
  const Prepared data = toy_data(60, 3);
  const nn::ModelParams p = random_params(dims, data.ts, 5);
  const LossOptions o = small_options();
  const std::vector<Eigen::Index> starts{3, 17, 40};
  const LossResult r = loss(p, data, starts, o);
  ASSERT_TRUE(r.finite);
  const LossParts expect = oracle_loss(p, data, starts, o);
  EXPECT_NEAR(r.parts.simulation, expect.simulation, 1e-12 * expect.simulation);
  EXPECT_NEAR(r.parts.constraint, expect.constraint, 1e-12 * (1.0 + expect.constraint));
  EXPECT_NEAR(r.parts.barrier, expect.barrier, 1e-12 * (1.0 + expect.barrier));
  EXPECT_NEAR(r.parts.weight, expect.weight, 1e-15);
  EXPECT_NEAR(r.parts.total, expect.total, 1e-12 * expect.total);
}

TEST(Loss, GradientMatchesCentralDifferences) {
  const nn::Dims dims = small_dims();
  const Prepared data = toy_data(60, 3);
  nn::ModelParams p = random_params(dims, data.ts, 8);
  const LossOptions o = small_options();
  const std::vector<Eigen::Index> starts{4, 22, 51};
  const LossResult r = loss(p, data, starts, o);
  ASSERT_TRUE(r.finite);
  int checked = 0;
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    for (Eigen::Index k = 0; k < p.at(i).size(); k += 3) {
      const double v = p.at(i).data()[k];
      const double h = 1e-6 * std::max(1.0, std::abs(v));
      p.at(i).data()[k] = v + h;
      const double up = loss(p, data, starts, o).parts.total;
      p.at(i).data()[k] = v - h;
      const double down = loss(p, data, starts, o).parts.total;
      p.at(i).data()[k] = v;
      const double fd = (up - down) / (2.0 * h);
      const double an = r.grads[i].data()[k];
      EXPECT_LE(std::abs(an - fd), 1e-5 * std::max(1.0, std::abs(fd)))
          << p.tensors[i].name << "[" << k << "]";
      ++checked;
    }
  }
  EXPECT_GT(checked, 40);
}

TEST(Loss, FixedTauGetsNoGradient) {
  const nn::Dims dims = small_dims();
  const Prepared data = toy_data(60, 3);
  const nn::ModelParams p = random_params(dims, data.ts, 8);
  LossOptions o = small_options();
  o.tau_trainable = false;
  const LossResult r = loss(p, data, {10}, o);
  ASSERT_TRUE(r.finite);
  EXPECT_EQ(r.grads[p.tau].norm(), 0.0);
}

TEST(Loss, DivergenceIsFlagged) {
  const nn::Dims dims = small_dims();
  const Prepared data = toy_data(60, 3);
  nn::ModelParams p = random_params(dims, data.ts, 8);
  p.A() = 5.0 * Eigen::MatrixXd::Identity(2, 2);
  p.at(p.tau).setConstant(1e-4);
  LossOptions o = small_options();
  o.divergence_limit = 1e6;
  const LossResult r = loss(p, data, {10}, o);
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.finite);
}

TEST(Loss, RejectsBadStarts) {
  const nn::Dims dims = small_dims();
  const Prepared data = toy_data(60, 3);
  const nn::ModelParams p = random_params(dims, data.ts, 8);
  const LossOptions o = small_options();
  EXPECT_THROW(loss(p, data, {}, o), Error);
  EXPECT_THROW(loss(p, data, {2}, o), Error);
  EXPECT_THROW(loss(p, data, {55}, o), Error);
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  const nn::ModelParams init = random_params(small_dims(), 0.5, 1);
  nn::ModelParams p = init;
  Adam adam(p);
  std::vector<Eigen::MatrixXd> grads;
  for (const auto& t : p.tensors) grads.push_back(Eigen::MatrixXd::Constant(t.value.rows(), t.value.cols(), -2.0));
  ASSERT_TRUE(adam.step(p, grads, 0.01));
  EXPECT_EQ(adam.count(), 1);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    const Eigen::MatrixXd delta = p.at(i) - init.at(i);
    EXPECT_NEAR(delta.maxCoeff(), 0.01 * 2.0 / (2.0 + 1e-8), 1e-15);
    EXPECT_NEAR(delta.minCoeff(), 0.01 * 2.0 / (2.0 + 1e-8), 1e-15);
  }
}

TEST(Adam, NonFiniteGradientLeavesStateUntouched) {
  const nn::ModelParams init = random_params(small_dims(), 0.5, 1);
  nn::ModelParams p = init;
  Adam adam(p);
  std::vector<Eigen::MatrixXd> grads;
  for (const auto& t : p.tensors) grads.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
  grads[2](0, 0) = std::nan("");
  EXPECT_FALSE(adam.step(p, grads, 0.01));
  EXPECT_EQ(adam.count(), 0);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) EXPECT_EQ(p.at(i), init.at(i));
}

TEST(Simulate, FirstOutputUsesEncoderState) {
  const nn::Dims dims = small_dims();
  const Prepared data = toy_data(40, 6);
  const nn::ModelParams p = random_params(dims, data.ts, 3);
  const Eigen::MatrixXd out = simulate(p, data.u, data.y, data.ts, 1e-9);
  ASSERT_EQ(out.rows(), 40 - dims.lag());
  const Eigen::VectorXd x0 = nn::encode(p, data.u.topRows(dims.lag()), data.y.topRows(dims.lag()));
  const Eigen::VectorXd y0 = nn::g_forward(p, x0, data.u.row(dims.lag()).transpose());
  EXPECT_EQ(out(0, 0), y0(0));
  EXPECT_THROW(simulate(p, data.u.topRows(3), data.y.topRows(3), data.ts, 1e-9), Error);
}

TEST(Rmse, Values) {
  Eigen::MatrixXd a(4, 1), b(4, 1);
  a << 100, 1, 2, 3;
  b << 0, 1, 4, 3;
  EXPECT_DOUBLE_EQ(rmse(a, b, 1), std::sqrt(4.0 / 3.0));
  EXPECT_THROW(rmse(a, b, 4), Error);
  EXPECT_THROW(rmse(a, Eigen::MatrixXd(3, 1), 0), Error);
}

RunConfig fit_config() {
  RunConfig c;
  c.nx = 2;
  c.na = 2;
  c.nb = 3;
  c.hidden = 8;
  c.batch = 8;
  c.seq_len = 10;
  c.max_steps = 120;
  c.val_interval = 20;
  c.patience = 1000;
  c.ts = 0.5;
  c.tau_init_ratio = 0.3;
  c.lr_schedule = {{0, 0.01}};
  return c;
}

TEST(Fit, ReducesValidationErrorAndKeepsBest) {
  const Prepared train = toy_data(300, 1);
  const Prepared val = toy_data(120, 2);
  const RunConfig c = fit_config();
  const data::Scaler unit{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  const nn::ModelParams init = nn::init_params(c, 1, 1);
  const double before = evaluate(init, val, unit, c).rmse;
  std::vector<long> seen;
  const FitResult r = fit(init, train, val, unit, c, true, [&](const HistoryRow& row) { seen.push_back(row.step); });
  EXPECT_EQ(r.steps_run, 120);
  EXPECT_EQ(r.history.size(), 120u);
  EXPECT_EQ(seen.size(), 120u);
  EXPECT_LT(r.best_val_rmse, before);
  EXPECT_DOUBLE_EQ(evaluate(r.best, val, unit, c).rmse, r.best_val_rmse);
  double min_val = std::numeric_limits<double>::infinity();
  for (const auto& row : r.history) {
    const bool validated = (row.step + 1) % c.val_interval == 0;
    EXPECT_EQ(std::isnan(row.val_rmse), !validated) << row.step;
    if (validated) min_val = std::min(min_val, row.val_rmse);
    EXPECT_EQ(row.ratio.size(), 2);
  }
  EXPECT_EQ(min_val, r.best_val_rmse);
  EXPECT_EQ(r.best_step % c.val_interval, 0);
  // Trainable tau moved.
  EXPECT_NE(r.last.raw_tau(), init.raw_tau());
}

TEST(Fit, FixedTauStaysPut) {
  const Prepared train = toy_data(300, 1);
  const Prepared val = toy_data(120, 2);
  RunConfig c = fit_config();
  c.max_steps = 20;
  const data::Scaler unit{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  const nn::ModelParams init = nn::init_params(c, 1, 1);
  const FitResult r = fit(init, train, val, unit, c, false);
  EXPECT_EQ(r.last.raw_tau(), init.raw_tau());
}

TEST(Fit, DeterministicForSeed) {
  const Prepared train = toy_data(300, 1);
  const Prepared val = toy_data(120, 2);
  RunConfig c = fit_config();
  c.max_steps = 30;
  const data::Scaler unit{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  const nn::ModelParams init = nn::init_params(c, 1, 1);
  const FitResult a = fit(init, train, val, unit, c, true);
  const FitResult b = fit(init, train, val, unit, c, true);
  for (std::size_t i = 0; i < a.last.tensors.size(); ++i) EXPECT_EQ(a.last.at(i), b.last.at(i));
}

TEST(Fit, EarlyStopsAfterPatience) {
  const Prepared train = toy_data(300, 1);
  const Prepared val = toy_data(120, 2);
  RunConfig c = fit_config();
  c.max_steps = 500;
  c.patience = 40;
  c.lr_schedule = {{0, 0.0}};  // nothing improves
  const data::Scaler unit{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  const nn::ModelParams init = nn::init_params(c, 1, 1);
  const FitResult r = fit(init, train, val, unit, c, false);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_EQ(r.best_step, 0);
  EXPECT_EQ(r.steps_run, 40);
}

TEST(Fit, ZeroStepsReturnsInit) {
  const Prepared train = toy_data(300, 1);
  const Prepared val = toy_data(120, 2);
  RunConfig c = fit_config();
  c.max_steps = 0;
  const data::Scaler unit{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  const nn::ModelParams init = nn::init_params(c, 1, 1);
  const FitResult r = fit(init, train, val, unit, c, true);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.best.at(0), init.at(0));
}

TEST(Fit, EveryStepDivergingFails) {
  const Prepared train = toy_data(300, 1);
  const Prepared val = toy_data(120, 2);
  RunConfig c = fit_config();
  c.max_steps = 10;
  c.tau_init_ratio = 1e5;
  c.divergence_limit = 1e3;
  const data::Scaler unit{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  nn::ModelParams init = nn::init_params(c, 1, 1);
  init.A() = Eigen::MatrixXd::Identity(2, 2);
  try {
    fit(init, train, val, unit, c, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTrainingFailed);
  }
}

TEST(History, HeaderMatchesValues) {
  HistoryRow row;
  row.ratio = Eigen::Vector3d(1, 2, 3);
  EXPECT_EQ(history_header(3).size(), history_values(row).size());
  EXPECT_EQ(history_header(3).back(), "ratio_2");
}

}  // namespace
}  // namespace sdnid::train
