#include "sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <thread>

#include "error.hpp"
#include "pipeline.hpp"

namespace sdnid::sdn {

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 1) {
    throw Error(ErrorCode::kInvalidArgument, "log_grid needs 0 < lo < hi and n >= 1");
  }
  if (n == 1) return {lo};
  std::vector<double> g(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> default_grid() { return log_grid(1e-4, 40.0, 10); }

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  const double lo = values[n / 2 - 1];
  const double hi = values[n / 2];
  if (std::isinf(hi)) return hi;
  return 0.5 * (lo + hi);
}

int workers_from_env() {
  const char* env = std::getenv("SDNID_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("SDNID_WORKERS must be a positive integer, got '") + env + "'");
  }
  return static_cast<int>(std::min<long>(v, 256));
}

std::size_t select_point(const std::vector<double>& medians, const std::vector<bool>& failed) {
  if (medians.size() != failed.size()) {
    throw Error(ErrorCode::kShapeMismatch, "select_point: medians and flags differ in length");
  }
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < medians.size(); ++i) {
    if (failed[i]) continue;
    if (!best || medians[i] < medians[*best]) best = i;
  }
  if (!best) throw Error(ErrorCode::kSweepFailed, "every run at every grid point diverged");
  return *best;
}

std::vector<double> SweepResult::val_rmses(std::size_t point) const {
  std::vector<double> v;
  for (const auto& r : runs) {
    if (r.ratio == grid.at(point)) v.push_back(r.val_rmse);
  }
  return v;
}

SweepResult cross_validate_tau(const data::Splits& splits, const RunConfig& base,
                               const std::vector<double>& grid, int seeds, long budget,
                               int workers) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "sweep grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw Error(ErrorCode::kInvalidArgument, "sweep grid must be positive and strictly increasing");
    }
  }
  if (seeds < 1) throw Error(ErrorCode::kInvalidArgument, "seeds must be >= 1");
  if (budget <= 0) throw Error(ErrorCode::kInvalidArgument, "budget must be > 0");

  SweepResult result;
  result.grid = grid;
  const std::size_t jobs = grid.size() * static_cast<std::size_t>(seeds);
  result.runs.resize(jobs);

  auto run_job = [&](std::size_t j) {
    SweepRun& run = result.runs[j];
    run.ratio = grid[j / static_cast<std::size_t>(seeds)];
    run.seed = base.seed + j % static_cast<std::size_t>(seeds);
    RunConfig cfg = base;
    cfg.tau_mode = TauMode::kFixed;
    cfg.tau_init_ratio = run.ratio;
    cfg.seed = run.seed;
    cfg.max_steps = budget;
    try {
      const PipelineResult p = run_pipeline(splits, cfg);
      run.val_rmse = p.fit.best_val_rmse;
      run.test_rmse = p.test_eval.rmse;
      run.diverged = !std::isfinite(run.val_rmse) || p.test_eval.diverged;
      if (p.fit.skipped > 0) run.note = std::to_string(p.fit.skipped) + " skipped steps";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTrainingFailed) throw;
      run.diverged = true;
      run.note = e.what();
    }
    if (run.diverged) {
      run.val_rmse = std::numeric_limits<double>::infinity();
      run.test_rmse = std::numeric_limits<double>::infinity();
    }
  };

  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs)));
  if (n_workers == 1) {
    for (std::size_t j = 0; j < jobs; ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t j = next++; j < jobs; j = next++) run_job(j);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
          next = jobs;
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> val, test;
    bool all_diverged = true;
    for (int s = 0; s < seeds; ++s) {
      const SweepRun& r =
          result.runs[i * static_cast<std::size_t>(seeds) + static_cast<std::size_t>(s)];
      val.push_back(r.val_rmse);
      test.push_back(r.test_rmse);
      all_diverged = all_diverged && r.diverged;
    }
    result.median_val.push_back(median(val));
    result.median_test.push_back(median(test));
    result.failed.push_back(all_diverged);
  }
  result.chosen = select_point(result.median_val, result.failed);
  return result;
}

void write_sweep_table(const std::string& path, const SweepResult& result, char delimiter) {
  data::TableWriter out(path, {"ratio", "seed", "val_rmse", "test_rmse", "diverged"}, delimiter);
  for (const auto& r : result.runs) {
    out.row(std::vector<double>{r.ratio, static_cast<double>(r.seed), r.val_rmse, r.test_rmse,
                                r.diverged ? 1.0 : 0.0});
  }
}

}  // namespace sdnid::sdn
