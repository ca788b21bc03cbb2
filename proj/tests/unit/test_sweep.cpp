#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "error.hpp"
#include "sweep.hpp"

namespace sdnid::sdn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(Grid, LogSpacing) {
  const auto g = log_grid(1e-3, 10.0, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.front(), 1e-3);
  EXPECT_EQ(g.back(), 10.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], 10.0, 1e-12);
  EXPECT_EQ(default_grid().size(), 10u);
  EXPECT_EQ(default_grid().front(), 1e-4);
  EXPECT_EQ(default_grid().back(), 40.0);
  EXPECT_EQ(log_grid(2.0, 3.0, 1), std::vector<double>{2.0});
  EXPECT_THROW(log_grid(0.0, 1.0, 3), Error);
  EXPECT_THROW(log_grid(2.0, 1.0, 3), Error);
}

TEST(Median, OddEvenAndDiverged) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_EQ(median({1.0, kInf, 2.0}), 2.0);
  EXPECT_EQ(median({1.0, kInf}), kInf);
  EXPECT_EQ(median({1.0, 2.0, kInf, kInf}), kInf);
  EXPECT_THROW(median({}), Error);
}

TEST(Select, SmallestMedianTiesToLargerTau) {
  EXPECT_EQ(select_point({3.0, 1.0, 2.0}, {false, false, false}), 1u);
  EXPECT_EQ(select_point({1.0, 1.0, 2.0}, {false, false, false}), 0u);
  EXPECT_EQ(select_point({1.0, 2.0, 3.0}, {true, false, false}), 1u);
  try {
    select_point({kInf, kInf}, {true, true});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSweepFailed);
  }
  EXPECT_THROW(select_point({1.0}, {false, false}), Error);
}

TEST(Workers, FromEnvironment) {
  unsetenv("SDNID_WORKERS");
  EXPECT_EQ(workers_from_env(), 1);
  setenv("SDNID_WORKERS", "3", 1);
  EXPECT_EQ(workers_from_env(), 3);
  setenv("SDNID_WORKERS", "zero", 1);
  EXPECT_THROW(workers_from_env(), Error);
  setenv("SDNID_WORKERS", "0", 1);
  EXPECT_THROW(workers_from_env(), Error);
  unsetenv("SDNID_WORKERS");
}

data::Splits cts_splits() {
  const Signal u = data::random_steps(700, 4.0, 4.0, 10, 60, 3);
  const data::CtsRun r = data::cts_oracle(u, data::CtsParams{}, Eigen::Vector2d::Zero(), 30.0, 4);
  return data::split_fractions({u, r.y}, 0.6, 0.2, 0.2);
}

RunConfig tiny_config() {
  RunConfig c;
  c.nx = 2;
  c.hidden = 8;
  c.batch = 4;
  c.seq_len = 16;
  c.val_interval = 5;
  c.ts = 4.0;
  return c;
}

TEST(CrossValidate, DeterministicAcrossWorkerCounts) {
  const data::Splits s = cts_splits();
  const std::vector<double> grid{0.01, 0.1};
  const SweepResult a = cross_validate_tau(s, tiny_config(), grid, 2, 10, 1);
  const SweepResult b = cross_validate_tau(s, tiny_config(), grid, 2, 10, 3);
  ASSERT_EQ(a.runs.size(), 4u);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(a.runs[i].ratio, b.runs[i].ratio);
    EXPECT_EQ(a.runs[i].seed, b.runs[i].seed);
    EXPECT_EQ(a.runs[i].val_rmse, b.runs[i].val_rmse);
  }
  EXPECT_EQ(a.runs[0].ratio, 0.01);
  EXPECT_EQ(a.runs[1].seed, tiny_config().seed + 1);
  EXPECT_EQ(a.runs[2].ratio, 0.1);
  EXPECT_EQ(a.val_rmses(1).size(), 2u);
  EXPECT_EQ(a.chosen, b.chosen);
  EXPECT_EQ(a.median_val[a.chosen], std::min(a.median_val[0], a.median_val[1]));
  EXPECT_EQ(a.chosen_ratio(), grid[a.chosen]);
}

TEST(CrossValidate, ArgumentChecks) {
  const data::Splits s = cts_splits();
  EXPECT_THROW(cross_validate_tau(s, tiny_config(), {}, 1, 5), Error);
  EXPECT_THROW(cross_validate_tau(s, tiny_config(), {0.2, 0.1}, 1, 5), Error);
  EXPECT_THROW(cross_validate_tau(s, tiny_config(), {0.1}, 0, 5), Error);
  EXPECT_THROW(cross_validate_tau(s, tiny_config(), {0.1}, 1, 0), Error);
}

TEST(CrossValidate, AllDivergedFails) {
  const data::Splits s = cts_splits();
  RunConfig c = tiny_config();
  c.divergence_limit = 1e-6;  // every rollout trips the guard
  try {
    cross_validate_tau(s, c, {0.1}, 1, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSweepFailed);
  }
}

TEST(CrossValidate, TableLayout) {
  SweepResult r;
  r.grid = {0.1};
  r.runs = {SweepRun{0.1, 3, 0.5, kInf, true, ""}};
  const std::string p = (std::filesystem::temp_directory_path() / "sdnid_sweep.csv").string();
  write_sweep_table(p, r);
  std::ifstream in(p);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "ratio,seed,val_rmse,test_rmse,diverged");
  EXPECT_EQ(row, "0.10000000000000001,3,0.5,inf,1");
  std::filesystem::remove(p);
}

}  // namespace
}  // namespace sdnid::sdn
