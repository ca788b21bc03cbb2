#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(SDNID_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p) != nullptr) r.out += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string field(const std::string& out, const std::string& key) {
  const auto pos = out.find(key + ": ");
  if (pos == std::string::npos) return {};
  const auto start = pos + key.size() + 2;
  return out.substr(start, out.find('\n', start) - start);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "sdnid_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static fs::path dir_;
};

fs::path Cli::dir_;

const char* kSmall =
    "--set nx=2 --set hidden=8 --set batch=4 --set seq_len=16 --set val_interval=5 "
    "--set max_steps=20";

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("train --tau-mode sometimes --data " + path("none.csv")).code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, MakeDataIsDeterministic) {
  ASSERT_EQ(run("make-data --length 300 --noise-snr 30 --seed 4 --out " + path("a.csv")).code, 0);
  ASSERT_EQ(run("make-data --length 300 --noise-snr 30 --seed 4 --out " + path("b.csv")).code, 0);
  const auto a = read_csv(path("a.csv"));
  EXPECT_EQ(a.size(), 301u);
  EXPECT_EQ(a[0], (std::vector<std::string>{"u", "y"}));
  EXPECT_EQ(a, read_csv(path("b.csv")));
  EXPECT_EQ(run("make-data --system pendulum --out " + path("c.csv")).code, 2);
}

TEST_F(Cli, ZeroInputGivesZeroRecord) {
  ASSERT_EQ(run("make-data --length 100 --u-max 0 --out " + path("zero.csv")).code, 0);
  const auto rows = read_csv(path("zero.csv"));
  ASSERT_EQ(rows.size(), 101u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(std::stod(rows[i][0]), 0.0);
    EXPECT_EQ(std::stod(rows[i][1]), 0.0);
  }
}

TEST_F(Cli, MeasuredSnrMatchesFlag) {
  ASSERT_EQ(run("make-data --length 4000 --seed 11 --out " + path("clean.csv")).code, 0);
  ASSERT_EQ(run("make-data --length 4000 --seed 11 --noise-snr 25 --out " + path("noisy.csv")).code, 0);
  const auto clean = read_csv(path("clean.csv"));
  const auto noisy = read_csv(path("noisy.csv"));
  double mean = 0.0;
  for (std::size_t i = 1; i < clean.size(); ++i) mean += std::stod(clean[i][1]);
  mean /= 4000.0;
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 1; i < clean.size(); ++i) {
    const double y = std::stod(clean[i][1]);
    signal += (y - mean) * (y - mean);
    const double e = std::stod(noisy[i][1]) - y;
    noise += e * e;
  }
  EXPECT_NEAR(10.0 * std::log10(signal / noise), 25.0, 1.0);
}

TEST_F(Cli, EstimateBla) {
  ASSERT_EQ(run("make-data --length 1000 --noise-snr 30 --seed 2 --out " + path("bla.csv")).code, 0);
  const Result r = run("estimate-bla --data " + path("bla.csv") + " --ts 4 --model-out " + path("lin.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_GT(std::stod(field(r.out, "tau")), 0.0);
  EXPECT_TRUE(fs::exists(path("lin.json")));
  EXPECT_EQ(run("estimate-bla --data " + path("bla.csv") + " --order 0").code, 2);
  EXPECT_EQ(run("estimate-bla --data " + path("bla.csv") + " --u-cols nope").code, 3);
}

TEST_F(Cli, TrainThenSimulateReproducesValidationRmse) {
  ASSERT_EQ(run("make-data --length 500 --noise-snr 30 --seed 7 --out " + path("tr.csv")).code, 0);
  ASSERT_EQ(run("make-data --length 200 --noise-snr 30 --seed 8 --out " + path("va.csv")).code, 0);
  const Result t = run(std::string("train ") + kSmall + " --tau-mode fixed:0.1 --train " + path("tr.csv") +
                    " --val " + path("va.csv") + " --out " + path("run"));
  ASSERT_EQ(t.code, 0) << t.out;
  for (const char* f : {"checkpoint.json", "history.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(path("run/") + f)) << f;
  }
  const auto history = read_csv(path("run/history.csv"));
  ASSERT_EQ(history.size(), 21u);
  std::size_t col = 0;
  while (col < history[0].size() && history[0][col] != "val_rmse") ++col;
  ASSERT_LT(col, history[0].size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < history.size(); ++i) {
    const double v = std::stod(history[i][col]);
    if (!std::isnan(v)) best = std::min(best, v);
  }

  const Result s = run("simulate --checkpoint " + path("run/checkpoint.json") + " --data " +
                    path("va.csv") + " --out " + path("traj.csv"));
  ASSERT_EQ(s.code, 0) << s.out;
  const double rmse = std::stod(field(s.out, "rmse"));
  const double val = std::stod(field(t.out, "rmse val"));
  EXPECT_NEAR(rmse, val, 1e-9);
  if (std::isfinite(best)) EXPECT_NEAR(rmse, best, 1e-9 * std::max(1.0, best));
  const auto traj = read_csv(path("traj.csv"));
  EXPECT_EQ(traj[0], (std::vector<std::string>{"k", "t", "y", "y_hat"}));
  EXPECT_EQ(traj.size(), 200u - 5u + 1u);
  EXPECT_EQ(traj[1][0], "5");
  EXPECT_EQ(std::stod(traj[1][1]), 20.0);

  const auto manifest = nlohmann::json::parse(std::ifstream(path("run/manifest.json")));
  EXPECT_EQ(manifest["command"], "train");
  // Checkpoint on its own training data reproduces the recorded training RMSE.
  const Result own = run("simulate --checkpoint " + path("run/checkpoint.json") + " --data " +
                         path("tr.csv") + " --out " + path("traj_tr.csv"));
  ASSERT_EQ(own.code, 0) << own.out;
  EXPECT_NEAR(std::stod(field(own.out, "rmse")),
              std::stod(manifest["notes"]["train_rmse"].get<std::string>()), 1e-9);
  EXPECT_EQ(manifest["inputs"].size(), 2u);
  EXPECT_EQ(manifest["inputs"][path("tr.csv")].get<std::string>().size(), 64u);
}

TEST_F(Cli, MissingCheckpointFails) {
  ASSERT_EQ(run("make-data --length 50 --out " + path("m.csv")).code, 0);
  const Result r = run("simulate --checkpoint " + path("nothing.json") + " --data " + path("m.csv"));
  EXPECT_NE(r.code, 0);
}

TEST_F(Cli, TrainBlaModeReportsEstimate) {
  ASSERT_EQ(run("make-data --length 600 --noise-snr 30 --seed 3 --out " + path("bl.csv")).code, 0);
  const Result t = run(std::string("train ") + kSmall + " --set max_steps=5 --tau-mode bla --data " +
                    path("bl.csv") + " --out " + path("blarun"));
  ASSERT_EQ(t.code, 0) << t.out;
  EXPECT_NE(t.out.find("bla tau"), std::string::npos);
}

TEST_F(Cli, DivergenceExitsFour) {
  ASSERT_EQ(run("make-data --length 400 --seed 3 --out " + path("dv.csv")).code, 0);
  const Result t = run(std::string("train ") + kSmall + " --set divergence_limit=1e-9 --data " +
                    path("dv.csv") + " --out " + path("dvrun"));
  EXPECT_EQ(t.code, 4) << t.out;
}

TEST_F(Cli, SweepWritesTable) {
  ASSERT_EQ(run("make-data --length 500 --noise-snr 30 --seed 5 --out " + path("sw.csv")).code, 0);
  const Result s = run(std::string("sweep ") + kSmall + " --grid 0.01,0.1 --seeds 2 --budget 10 --workers 2 --data " +
                    path("sw.csv") + " --out " + path("sweep"));
  ASSERT_EQ(s.code, 0) << s.out;
  const auto table = read_csv(path("sweep/sweep.csv"));
  ASSERT_EQ(table.size(), 5u);
  EXPECT_EQ(table[0][0], "ratio");
  EXPECT_TRUE(fs::exists(path("sweep/manifest.json")));
  const Result one = run(std::string("sweep ") + kSmall + " --grid 0.1 --seeds 1 --budget 3 --data " +
                        path("sw.csv") + " --out " + path("sweep1"));
  ASSERT_EQ(one.code, 0) << one.out;
  EXPECT_EQ(read_csv(path("sweep1/sweep.csv")).size(), 2u);
  EXPECT_EQ(run(std::string("sweep ") + kSmall + " --grid 0.1,0.01 --data " + path("sw.csv") +
                " --out " + path("sweep2")).code, 2);
}

TEST_F(Cli, BenchmarkColumns) {
  // Estimation and validation records side by side in one file.
  ASSERT_EQ(run("make-data --length 300 --seed 6 --out " + path("src.csv")).code, 0);
  std::ofstream f(path("bench.csv"));
  f << "uEst,uVal,yEst,yVal\n";
  const auto a = read_csv(path("src.csv"));
  for (std::size_t i = 1; i < a.size(); ++i) f << a[i][0] << "," << a[i][0] << "," << a[i][1] << "," << a[i][1] << "\n";
  f.close();
  const Result t = run(std::string("train ") + kSmall + " --set max_steps=3 --benchmark --val-length 100 --train " +
                    path("bench.csv") + " --test " + path("bench.csv") +
                    " --u-cols uEst --y-cols yEst --test-u-cols uVal --test-y-cols yVal --out " + path("bench"));
  ASSERT_EQ(t.code, 0) << t.out;
  EXPECT_NE(t.out.find("rmse test"), std::string::npos);
}

}  // namespace
