// sdnid command-line front end. Talks to the library through the C API only.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdnid.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitTraining = 4;

struct Failure : std::runtime_error {
  Failure(sdnid_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  sdnid_status status;
};

void check(sdnid_status s, const std::string& context) {
  if (s == SDNID_OK) return;
  const std::string detail = sdnid_last_error();
  throw Failure(s, context + ": " + (detail.empty() ? sdnid_status_name(s) : detail));
}

int exit_code(sdnid_status s) {
  switch (s) {
    case SDNID_OK: return kExitOk;
    case SDNID_E_INVALID_ARGUMENT: return kExitUsage;
    case SDNID_E_TRAINING_FAILED:
    case SDNID_E_SWEEP_FAILED:
    case SDNID_E_DIVERGED: return kExitTraining;
    case SDNID_E_INTERNAL: return 1;
    default: return kExitData;
  }
}

struct ConfigDel { void operator()(sdnid_config* c) const { sdnid_config_free(c); } };
struct DatasetDel { void operator()(sdnid_dataset* d) const { sdnid_dataset_free(d); } };
struct ModelDel { void operator()(sdnid_model* m) const { sdnid_model_free(m); } };
using Config = std::unique_ptr<sdnid_config, ConfigDel>;
using Dataset = std::unique_ptr<sdnid_dataset, DatasetDel>;
using Model = std::unique_ptr<sdnid_model, ModelDel>;

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string config_value(const sdnid_config* c, const char* key) {
  size_t needed = 0;
  sdnid_config_get(c, key, nullptr, 0, &needed);
  std::string out(needed, '\0');
  check(sdnid_config_get(c, key, out.data(), out.size(), nullptr), "config");
  out.resize(needed - 1);
  return out;
}

// Shared flags of every command that reads a configuration.
struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;
  std::string tau_mode;
  long long seed = -1;

  void add(CLI::App* app, bool with_tau_mode) {
    app->add_option("--config", file, "flat key = value configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "override one configuration key, key=value (repeatable)");
    if (with_tau_mode) {
      app->add_option("--tau-mode", tau_mode, "fixed:<T_s/tau> | trainable | bla");
    }
    app->add_option("--seed", seed, "random seed");
  }

  // Precedence: flag > file > default.
  Config build() const {
    sdnid_config* raw = nullptr;
    check(sdnid_config_create(&raw), "config");
    Config c(raw);
    if (!file.empty()) check(sdnid_config_load(c.get(), file.c_str()), "config file " + file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw Failure(SDNID_E_INVALID_ARGUMENT, "--set expects key=value, got '" + kv + "'");
      }
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      check(sdnid_config_set(c.get(), trim(kv.substr(0, eq)).c_str(), trim(kv.substr(eq + 1)).c_str()),
            "--set " + kv);
    }
    if (!tau_mode.empty()) {
      if (tau_mode.rfind("fixed:", 0) == 0) {
        check(sdnid_config_set(c.get(), "tau_mode", "fixed"), "--tau-mode");
        check(sdnid_config_set(c.get(), "tau_init_ratio", tau_mode.substr(6).c_str()), "--tau-mode");
      } else if (tau_mode == "trainable" || tau_mode == "bla") {
        check(sdnid_config_set(c.get(), "tau_mode", tau_mode.c_str()), "--tau-mode");
      } else {
        throw Failure(SDNID_E_INVALID_ARGUMENT,
                      "--tau-mode must be fixed:<ratio>, trainable or bla, got '" + tau_mode + "'");
      }
    }
    if (seed >= 0) check(sdnid_config_set(c.get(), "seed", std::to_string(seed).c_str()), "--seed");
    check(sdnid_config_validate(c.get()), "config");
    return c;
  }
};

// Data selection shared by train and sweep.
struct DataArgs {
  std::string data;
  std::string split = "0.7,0.15,0.15";
  std::string train, val, test;
  std::string u_cols = "u", y_cols = "y";
  std::string test_u_cols, test_y_cols;
  bool benchmark = false;
  long val_length = 512;
  char delimiter = ',';

  std::vector<std::string> inputs() const {
    std::vector<std::string> out;
    for (const auto* p : {&data, &train, &val, &test}) {
      if (!p->empty() && std::find(out.begin(), out.end(), *p) == out.end()) out.push_back(*p);
    }
    return out;
  }

  void add(CLI::App* app) {
    app->add_option("--data", data, "single record, split contiguously by --split")
        ->check(CLI::ExistingFile);
    app->add_option("--split", split, "train,val,test fractions for --data")->capture_default_str();
    app->add_option("--train", train, "training record")->check(CLI::ExistingFile);
    app->add_option("--val", val, "validation record")->check(CLI::ExistingFile);
    app->add_option("--test", test, "test record")->check(CLI::ExistingFile);
    app->add_option("--u-cols", u_cols, "comma separated input column names")->capture_default_str();
    app->add_option("--y-cols", y_cols, "comma separated output column names")->capture_default_str();
    app->add_option("--test-u-cols", test_u_cols, "input columns of --test/--val (default --u-cols)");
    app->add_option("--test-y-cols", test_y_cols, "output columns of --test/--val (default --y-cols)");
    app->add_flag("--benchmark", benchmark,
                  "validation = first --val-length samples of --test (benchmark protocol)");
    app->add_option("--val-length", val_length, "benchmark validation prefix length")->capture_default_str();
    app->add_option("--delimiter", delimiter, "CSV delimiter")->capture_default_str();
  }

  Dataset load(const std::string& path, const std::string& u, const std::string& y,
               double ts) const {
    const auto us = split_list(u);
    const auto ys = split_list(y);
    const auto uc = c_strings(us);
    const auto yc = c_strings(ys);
    sdnid_dataset* raw = nullptr;
    check(sdnid_dataset_load_csv(path.c_str(), uc.data(), uc.size(), yc.data(), yc.size(), ts,
                                 delimiter, &raw),
          "loading data");
    return Dataset(raw);
  }

  struct Splits {
    Dataset train, val, test;
  };

  Splits resolve(double ts) const {
    Splits s;
    const std::string tu = test_u_cols.empty() ? u_cols : test_u_cols;
    const std::string ty = test_y_cols.empty() ? y_cols : test_y_cols;
    if (!data.empty()) {
      if (!train.empty() || !val.empty() || !test.empty() || benchmark) {
        throw Failure(SDNID_E_INVALID_ARGUMENT, "--data excludes --train/--val/--test/--benchmark");
      }
      const auto f = split_list(split);
      if (f.size() != 3) throw Failure(SDNID_E_INVALID_ARGUMENT, "--split needs three fractions");
      Dataset all = load(data, u_cols, y_cols, ts);
      sdnid_dataset *a = nullptr, *b = nullptr, *c = nullptr;
      check(sdnid_split_fractions(all.get(), std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), &a,
                                  &b, &c),
            "--split");
      s.train.reset(a);
      s.val.reset(b);
      s.test.reset(c);
      return s;
    }
    if (train.empty()) throw Failure(SDNID_E_INVALID_ARGUMENT, "give --data or --train");
    s.train = load(train, u_cols, y_cols, ts);
    if (!test.empty()) s.test = load(test, tu, ty, ts);
    if (benchmark) {
      if (!s.test) throw Failure(SDNID_E_INVALID_ARGUMENT, "--benchmark needs --test");
      if (!val.empty()) throw Failure(SDNID_E_INVALID_ARGUMENT, "--benchmark excludes --val");
      sdnid_dataset* v = nullptr;
      check(sdnid_split_benchmark(s.test.get(), static_cast<size_t>(val_length), &v), "--benchmark");
      s.val.reset(v);
      std::fprintf(stderr,
                   "note: benchmark protocol, validation uses the first %ld samples of the test "
                   "record\n",
                   val_length);
    } else {
      if (val.empty()) throw Failure(SDNID_E_INVALID_ARGUMENT, "give --val or --benchmark");
      s.val = load(val, tu, ty, ts);
    }
    return s;
  }
};

std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw Failure(SDNID_E_IO, "cannot create " + dir + ": " + ec.message());
  return p;
}

void write_manifest(const std::filesystem::path& path, const char* command,
                    const sdnid_config* config, const std::vector<std::string>& inputs,
                    const std::vector<std::pair<std::string, std::string>>& outputs,
                    const std::vector<std::pair<std::string, std::string>>& notes) {
  std::vector<std::string> roles, paths, keys, values;
  for (const auto& [r, p] : outputs) {
    roles.push_back(r);
    paths.push_back(p);
  }
  for (const auto& [k, v] : notes) {
    keys.push_back(k);
    values.push_back(v);
  }
  const auto in = c_strings(inputs);
  const auto rc = c_strings(roles);
  const auto pc = c_strings(paths);
  const auto kc = c_strings(keys);
  const auto vc = c_strings(values);
  check(sdnid_manifest_write(path.string().c_str(), command, config, in.data(), in.size(), rc.data(),
                             pc.data(), pc.size(), kc.data(), vc.data(), vc.size()),
        "manifest");
}

double ts_of(const sdnid_config* c) { return std::stod(config_value(c, "ts")); }

int cmd_train(const ConfigArgs& ca, const DataArgs& da, const std::string& out_dir) {
  Config config = ca.build();
  const auto splits = da.resolve(ts_of(config.get()));
  const auto out = prepare_out(out_dir);
  const auto ckpt = (out / "checkpoint.json").string();
  const auto history = (out / "history.csv").string();
  const auto manifest = (out / "manifest.json").string();

  sdnid_model* raw = nullptr;
  sdnid_train_report rep{};
  check(sdnid_train(config.get(), splits.train.get(), splits.val.get(), splits.test.get(),
                    history.c_str(), da.delimiter, &raw, &rep),
        "train");
  Model model(raw);
  if (!std::isnan(rep.bla_tau)) {
    std::printf("bla tau: %s s (T_s/tau = %s)%s\n", fmt(rep.bla_tau).c_str(),
                fmt(ts_of(config.get()) / rep.bla_tau).c_str(),
                rep.bla_tustin_fallback ? " [bilinear fallback]" : "");
  }
  check(sdnid_model_set_manifest(model.get(), manifest.c_str()), "checkpoint");
  check(sdnid_model_save(model.get(), ckpt.c_str()), "checkpoint");

  std::vector<std::pair<std::string, std::string>> notes{
      {"tau_mode", config_value(config.get(), "tau_mode")},
      {"trained_ratio_mean", fmt(rep.ratio_mean)},
      {"trained_ratio_aggregation", "mean over tau entries"},
      {"steps_run", std::to_string(rep.steps_run)},
      {"best_step", std::to_string(rep.best_step)},
      {"skipped_steps", std::to_string(rep.skipped_steps)},
      {"validation", da.benchmark ? "test prefix (benchmark protocol)" : "held-out split"}};
  if (!std::isnan(rep.bla_tau)) notes.emplace_back("bla_tau", fmt(rep.bla_tau));
  notes.emplace_back("train_rmse", full(rep.train_rmse));
  notes.emplace_back("val_rmse", full(rep.val_rmse));
  if (splits.test) notes.emplace_back("test_rmse", full(rep.test_rmse));
  write_manifest(manifest, "train", config.get(), da.inputs(),
                 {{"checkpoint", ckpt}, {"history", history}}, notes);

  std::printf("steps: %ld (best %ld, skipped %ld%s)\n", rep.steps_run, rep.best_step,
              rep.skipped_steps, rep.early_stopped ? ", early stop" : "");
  std::printf("T_s/tau: mean %s [%s, %s]\n", fmt(rep.ratio_mean).c_str(), fmt(rep.ratio_min).c_str(),
              fmt(rep.ratio_max).c_str());
  std::printf("rmse train: %.17g\nrmse val: %.17g\n", rep.train_rmse, rep.val_rmse);
  if (splits.test) std::printf("rmse test: %.17g\n", rep.test_rmse);
  std::printf("checkpoint: %s\n", ckpt.c_str());
  return kExitOk;
}

std::vector<double> parse_grid(const std::string& grid) {
  // "a,b,c" or "log:lo:hi:n"
  if (grid.rfind("log:", 0) == 0) {
    const auto parts = split_list(grid.substr(4), ':');
    if (parts.size() != 3) throw Failure(SDNID_E_INVALID_ARGUMENT, "--grid log:lo:hi:n");
    const double lo = std::stod(parts[0]);
    const double hi = std::stod(parts[1]);
    const int n = std::stoi(parts[2]);
    if (!(lo > 0) || !(hi > lo) || n < 1) {
      throw Failure(SDNID_E_INVALID_ARGUMENT, "--grid log needs 0 < lo < hi and n >= 1");
    }
    std::vector<double> g;
    for (int i = 0; i < n; ++i) {
      g.push_back(n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
    }
    return g;
  }
  std::vector<double> g;
  for (const auto& s : split_list(grid)) g.push_back(std::stod(s));
  if (g.empty()) throw Failure(SDNID_E_INVALID_ARGUMENT, "--grid is empty");
  return g;
}

int cmd_sweep(const ConfigArgs& ca, const DataArgs& da, const std::string& grid_text, int seeds,
              long budget, int workers, const std::string& out_dir) {
  Config config = ca.build();
  const auto splits = da.resolve(ts_of(config.get()));
  const std::vector<double> grid = parse_grid(grid_text);
  if (budget <= 0) budget = std::stol(config_value(config.get(), "max_steps"));
  const auto out = prepare_out(out_dir);
  const auto table = (out / "sweep.csv").string();
  const auto manifest = (out / "manifest.json").string();

  double chosen = 0.0;
  std::vector<double> medians(grid.size());
  check(sdnid_sweep(config.get(), splits.train.get(), splits.val.get(), splits.test.get(),
                    grid.data(), grid.size(), seeds, budget, workers, table.c_str(), da.delimiter,
                    &chosen, nullptr, medians.data()),
        "sweep");
  write_manifest(manifest, "sweep", config.get(), da.inputs(), {{"table", table}},
                 {{"grid", grid_text},
                  {"seeds", std::to_string(seeds)},
                  {"budget", std::to_string(budget)},
                  {"chosen_ratio", fmt(chosen)}});
  for (size_t i = 0; i < grid.size(); ++i) {
    std::printf("T_s/tau %-10s median val rmse %s\n", fmt(grid[i]).c_str(), fmt(medians[i]).c_str());
  }
  std::printf("chosen T_s/tau: %s\ntable: %s\n", fmt(chosen).c_str(), table.c_str());
  return kExitOk;
}

int cmd_estimate_bla(const DataArgs& da, double ts, int order, int lag, bool raw_units,
                     const std::string& model_out) {
  if (da.data.empty()) throw Failure(SDNID_E_INVALID_ARGUMENT, "estimate-bla needs --data");
  Dataset data = da.load(da.data, da.u_cols, da.y_cols, ts);
  sdnid_bla_report rep{};
  check(sdnid_estimate_bla(data.get(), order, lag, raw_units ? 0 : 1,
                           model_out.empty() ? nullptr : model_out.c_str(), &rep),
        "estimate-bla");
  std::printf("order: %d\ntau: %s s\nT_s/tau: %s\n", rep.order, fmt(rep.tau).c_str(),
              fmt(rep.ratio).c_str());
  if (rep.tustin_fallback) std::printf("warning: log(A_d) undefined, bilinear conversion used\n");
  if (!rep.stable) std::printf("warning: fitted continuous model is not Hurwitz\n");
  return kExitOk;
}

int cmd_simulate(const std::string& ckpt, const DataArgs& da, const std::string& out) {
  sdnid_model* raw = nullptr;
  check(sdnid_model_load(ckpt.c_str(), &raw), "checkpoint " + ckpt);
  Model model(raw);
  sdnid_config* cfg_raw = nullptr;
  check(sdnid_model_config(model.get(), &cfg_raw), "checkpoint");
  Config config(cfg_raw);
  if (da.data.empty()) throw Failure(SDNID_E_INVALID_ARGUMENT, "simulate needs --data");
  const double ts = ts_of(config.get());
  Dataset data = da.load(da.data, da.u_cols, da.y_cols, ts);

  size_t length = 0, nu = 0, ny = 0, lag = 0;
  check(sdnid_dataset_info(data.get(), &length, &nu, &ny, nullptr), "data");
  check(sdnid_model_info(model.get(), nullptr, nullptr, &lag, nullptr), "checkpoint");
  if (length <= lag) throw Failure(SDNID_E_DATA, "record shorter than the encoder lag");
  std::vector<double> pred((length - lag) * ny);
  size_t rows = 0;
  double rmse = 0.0;
  check(sdnid_model_simulate(model.get(), data.get(), pred.data(), pred.size(), &rows, &rmse),
        "simulate");
  std::vector<double> y(length * ny);
  check(sdnid_dataset_copy_y(data.get(), y.data(), y.size()), "data");

  std::ofstream f(out);
  if (!f) throw Failure(SDNID_E_IO, "cannot write " + out);
  const auto names = split_list(da.y_cols);
  f << "k" << da.delimiter << "t";
  for (const auto& n : names) f << da.delimiter << n;
  for (const auto& n : names) f << da.delimiter << n << "_hat";
  f << '\n';
  char buf[64];
  for (size_t r = 0; r < rows; ++r) {
    const size_t k = r + lag;
    f << k << da.delimiter;
    std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(k) * ts);
    f << buf;
    for (size_t j = 0; j < ny; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", y[k * ny + j]);
      f << da.delimiter << buf;
    }
    for (size_t j = 0; j < ny; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", pred[r * ny + j]);
      f << da.delimiter << buf;
    }
    f << '\n';
  }
  if (!f) throw Failure(SDNID_E_IO, "write to " + out + " failed");
  std::printf("rows: %zu\nrmse: %.17g\ntrajectory: %s\n", rows, rmse, out.c_str());
  return kExitOk;
}

struct MakeDataArgs {
  std::string system = "cts";
  long length = 2000;
  double ts = 4.0;
  double snr_db = std::numeric_limits<double>::infinity();
  unsigned long long seed = 1;
  sdnid_cts_params cts{};
  sdnid_excitation exc{};
  std::string out;
};

int cmd_make_data(const MakeDataArgs& a) {
  if (a.system != "cts") throw Failure(SDNID_E_INVALID_ARGUMENT, "unknown --system " + a.system);
  if (a.length < 1) throw Failure(SDNID_E_INVALID_ARGUMENT, "--length must be >= 1");
  sdnid_dataset* raw = nullptr;
  check(sdnid_make_cts(&a.cts, &a.exc, static_cast<size_t>(a.length), a.ts, a.snr_db, a.seed, &raw),
        "make-data");
  Dataset data(raw);
  check(sdnid_dataset_save_csv(data.get(), a.out.c_str(), ','), "make-data");
  std::printf("wrote %ld samples to %s\n", a.length, a.out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time neural state-space identification with state-derivative "
               "normalization"};
  app.set_version_flag("--version", std::string(sdnid_version()) + " (" + sdnid_source_revision() + ")");
  app.require_subcommand(1);

  ConfigArgs train_cfg, sweep_cfg;
  DataArgs train_data, sweep_data, bla_data, sim_data;
  std::string train_out = "run";

  auto* train = app.add_subcommand("train", "train one model and write checkpoint, history, manifest");
  train_cfg.add(train, true);
  train_data.add(train);
  train->add_option("--out", train_out, "output directory")->capture_default_str();

  std::string grid = "log:1e-4:40:10";
  int seeds = 1;
  long budget = 0;
  int workers = 0;
  std::string sweep_out = "sweep";
  auto* sweep = app.add_subcommand("sweep", "cross-validate T_s/tau over a grid");
  sweep_cfg.add(sweep, false);
  sweep_data.add(sweep);
  sweep->add_option("--grid", grid, "comma separated T_s/tau values or log:lo:hi:n")->capture_default_str();
  sweep->add_option("--seeds", seeds, "runs per grid point")->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--budget", budget, "optimization steps per run (default: max_steps)");
  sweep->add_option("--workers", workers, "worker threads (default: SDNID_WORKERS or 1)");
  sweep->add_option("--out", sweep_out, "output directory")->capture_default_str();

  double bla_ts = 4.0;
  int order = 2, lag = 10;
  bool raw_units = false;
  std::string bla_model;
  auto* bla = app.add_subcommand("estimate-bla", "estimate tau from a best linear approximation");
  bla_data.add(bla);
  bla->add_option("--ts", bla_ts, "sampling interval in seconds")->capture_default_str();
  bla->add_option("--order", order, "state order")->capture_default_str();
  bla->add_option("--lag", lag, "ARX lag")->capture_default_str();
  bla->add_flag("--raw-units", raw_units, "skip z-scoring of u and y");
  bla->add_option("--model-out", bla_model, "write the fitted continuous model (JSON)");

  std::string ckpt, traj = "trajectory.csv";
  auto* sim = app.add_subcommand("simulate", "free-run simulation of a checkpoint");
  sim->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  sim_data.add(sim);
  sim->add_option("--out", traj, "trajectory file")->capture_default_str();

  MakeDataArgs md;
  sdnid_cts_defaults(&md.cts);
  sdnid_excitation_defaults(&md.exc);
  auto* make = app.add_subcommand("make-data", "generate a synthetic cascaded-tanks record");
  make->add_option("--system", md.system, "system (cts)")->capture_default_str();
  make->add_option("--length", md.length, "samples")->capture_default_str();
  make->add_option("--ts", md.ts, "sampling interval in seconds")->capture_default_str();
  make->add_option("--noise-snr", md.snr_db, "output SNR in dB (default: no noise)");
  make->add_option("--seed", md.seed, "random seed")->capture_default_str();
  make->add_option("--u-max", md.exc.u_max, "largest input level")->capture_default_str();
  make->add_option("--hold-min", md.exc.hold_min, "shortest hold in samples")->capture_default_str();
  make->add_option("--hold-max", md.exc.hold_max, "longest hold in samples")->capture_default_str();
  make->add_option("--k1", md.cts.k1, "")->capture_default_str();
  make->add_option("--k2", md.cts.k2, "")->capture_default_str();
  make->add_option("--k3", md.cts.k3, "")->capture_default_str();
  make->add_option("--k4", md.cts.k4, "")->capture_default_str();
  make->add_option("--x-max", md.cts.x_max, "tank overflow level")->capture_default_str();
  make->add_option("--out", md.out, "output CSV (columns u,y)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_cfg, train_data, train_out);
    if (*sweep) return cmd_sweep(sweep_cfg, sweep_data, grid, seeds, budget, workers, sweep_out);
    if (*bla) return cmd_estimate_bla(bla_data, bla_ts, order, lag, raw_units, bla_model);
    if (*sim) return cmd_simulate(ckpt, sim_data, traj);
    if (*make) return cmd_make_data(md);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.what());
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
