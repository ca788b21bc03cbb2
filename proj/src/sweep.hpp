#pragma once

// Cross-validation of the normalization factor over a grid of T_s / tau.

#include <limits>
#include <string>
#include <vector>

#include "config.hpp"
#include "data.hpp"

namespace sdnid::sdn {

struct SweepRun {
  double ratio = 0.0;
  unsigned long long seed = 0;
  double val_rmse = std::numeric_limits<double>::infinity();
  double test_rmse = std::numeric_limits<double>::infinity();
  bool diverged = false;
  std::string note;
};

struct SweepResult {
  std::vector<double> grid;          // strictly increasing T_s / tau
  std::vector<SweepRun> runs;        // grid-major, then seed
  std::vector<double> median_val;    // per grid point, +inf counts for diverged runs
  std::vector<double> median_test;
  std::vector<bool> failed;          // every run at the point diverged
  std::size_t chosen = 0;

  double chosen_ratio() const { return grid.at(chosen); }
  std::vector<double> val_rmses(std::size_t point) const;
};

// n log-spaced points over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);
std::vector<double> default_grid();

double median(std::vector<double> values);

// Index of the smallest median among points that did not fail. Scanning the
// ascending grid with strict improvement sends ties to the smaller ratio, i.e.
// the larger tau. Throws kSweepFailed when every point failed.
std::size_t select_point(const std::vector<double>& medians, const std::vector<bool>& failed);

// Worker count from SDNID_WORKERS, defaulting to 1.
int workers_from_env();

// Trains one fixed-tau model per (grid point, seed) with seeds
// base.seed .. base.seed + seeds - 1 and max_steps = budget. The argmin of the
// median validation RMSE is chosen; ties go to the larger tau. Throws
// kSweepFailed if every grid point failed.
SweepResult cross_validate_tau(const data::Splits& splits, const RunConfig& base,
                               const std::vector<double>& grid, int seeds, long budget,
                               int workers = 1);

void write_sweep_table(const std::string& path, const SweepResult& result, char delimiter = ',');

}  // namespace sdnid::sdn
