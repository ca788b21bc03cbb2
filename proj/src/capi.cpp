#define SDNID_BUILDING
#include "sdnid.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "bla.hpp"
#include "config.hpp"
#include "data.hpp"
#include "digest.hpp"
#include "error.hpp"
#include "pipeline.hpp"
#include "serialize.hpp"
#include "sweep.hpp"
#include "train.hpp"

#ifndef SDNID_VERSION_STRING
#define SDNID_VERSION_STRING "0.0.0"
#endif
#ifndef SDNID_REVISION_STRING
#define SDNID_REVISION_STRING "unknown"
#endif

struct sdnid_config {
  sdnid::RunConfig value;
};

struct sdnid_dataset {
  sdnid::data::IoData value;
};

struct sdnid_model {
  sdnid::io::Checkpoint value;
};

namespace {

thread_local std::string g_last_error;

sdnid_status map_code(sdnid::ErrorCode code) {
  using sdnid::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return SDNID_E_INVALID_ARGUMENT;
    case ErrorCode::kShapeMismatch: return SDNID_E_SHAPE_MISMATCH;
    case ErrorCode::kNonFinite: return SDNID_E_NON_FINITE;
    case ErrorCode::kDiverged: return SDNID_E_DIVERGED;
    case ErrorCode::kDegenerate: return SDNID_E_DEGENERATE;
    case ErrorCode::kRankDeficient: return SDNID_E_RANK_DEFICIENT;
    case ErrorCode::kData: return SDNID_E_DATA;
    case ErrorCode::kIo: return SDNID_E_IO;
    case ErrorCode::kTrainingFailed: return SDNID_E_TRAINING_FAILED;
    case ErrorCode::kSweepFailed: return SDNID_E_SWEEP_FAILED;
  }
  return SDNID_E_INTERNAL;
}

sdnid_status fail(sdnid_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
sdnid_status guard(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const sdnid::Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SDNID_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SDNID_E_INTERNAL, e.what());
  }
}

sdnid_status copy_string(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed != nullptr) *needed = s.size() + 1;
  if (buf == nullptr || cap < s.size() + 1) {
    return fail(SDNID_E_BUFFER_TOO_SMALL, "buffer needs " + std::to_string(s.size() + 1) + " bytes");
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return SDNID_OK;
}

sdnid_status copy_matrix(const Eigen::MatrixXd& m, double* out, size_t cap) {
  const auto n = static_cast<size_t>(m.size());
  if (out == nullptr || cap < n) {
    return fail(SDNID_E_BUFFER_TOO_SMALL, "buffer needs " + std::to_string(n) + " doubles");
  }
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      out, m.rows(), m.cols()) = m;
  return SDNID_OK;
}

#define SDNID_REQUIRE(cond, what) \
  if (!(cond)) return fail(SDNID_E_INVALID_ARGUMENT, what)

std::vector<std::string> names(const char* const* columns, size_t n) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) {
    if (columns[i] == nullptr) throw sdnid::Error(sdnid::ErrorCode::kInvalidArgument, "null column name");
    out.emplace_back(columns[i]);
  }
  return out;
}

std::vector<std::string> default_names(const char* prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

sdnid_dataset* wrap(sdnid::data::IoData d) { return new sdnid_dataset{std::move(d)}; }

}  // namespace

extern "C" {

const char* sdnid_version(void) { return SDNID_VERSION_STRING; }
const char* sdnid_source_revision(void) { return SDNID_REVISION_STRING; }
const char* sdnid_last_error(void) { return g_last_error.c_str(); }

const char* sdnid_status_name(sdnid_status status) {
  switch (status) {
    case SDNID_OK: return "ok";
    case SDNID_E_INVALID_ARGUMENT: return "invalid argument";
    case SDNID_E_SHAPE_MISMATCH: return "shape mismatch";
    case SDNID_E_NON_FINITE: return "non-finite value";
    case SDNID_E_DIVERGED: return "diverged";
    case SDNID_E_DEGENERATE: return "degenerate";
    case SDNID_E_RANK_DEFICIENT: return "rank deficient";
    case SDNID_E_DATA: return "data error";
    case SDNID_E_IO: return "i/o error";
    case SDNID_E_TRAINING_FAILED: return "training failed";
    case SDNID_E_SWEEP_FAILED: return "sweep failed";
    case SDNID_E_BUFFER_TOO_SMALL: return "buffer too small";
    case SDNID_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

sdnid_status sdnid_config_create(sdnid_config** out) {
  return guard([&] {
    SDNID_REQUIRE(out != nullptr, "out is null");
    *out = new sdnid_config{};
    return SDNID_OK;
  });
}

sdnid_status sdnid_config_copy(const sdnid_config* config, sdnid_config** out) {
  return guard([&] {
    SDNID_REQUIRE(config != nullptr && out != nullptr, "null argument");
    *out = new sdnid_config{config->value};
    return SDNID_OK;
  });
}

void sdnid_config_free(sdnid_config* config) { delete config; }

sdnid_status sdnid_config_load(sdnid_config* config, const char* path) {
  return guard([&] {
    SDNID_REQUIRE(config != nullptr && path != nullptr, "null argument");
    config->value = sdnid::load_config(path, config->value);
    return SDNID_OK;
  });
}

sdnid_status sdnid_config_set(sdnid_config* config, const char* key, const char* value) {
  return guard([&] {
    SDNID_REQUIRE(config != nullptr && key != nullptr && value != nullptr, "null argument");
    sdnid::RunConfig next = config->value;
    next.set(key, value);
    config->value = next;
    return SDNID_OK;
  });
}

sdnid_status sdnid_config_get(const sdnid_config* config, const char* key, char* buf, size_t cap,
                              size_t* needed) {
  return guard([&] {
    SDNID_REQUIRE(config != nullptr && key != nullptr, "null argument");
    return copy_string(config->value.get(key), buf, cap, needed);
  });
}

sdnid_status sdnid_config_text(const sdnid_config* config, char* buf, size_t cap,
                               size_t* needed) {
  return guard([&] {
    SDNID_REQUIRE(config != nullptr, "config is null");
    return copy_string(config->value.to_text(), buf, cap, needed);
  });
}

sdnid_status sdnid_config_validate(const sdnid_config* config) {
  return guard([&] {
    SDNID_REQUIRE(config != nullptr, "config is null");
    config->value.validate();
    return SDNID_OK;
  });
}

sdnid_status sdnid_dataset_load_csv(const char* path, const char* const* u_columns, size_t n_u,
                                    const char* const* y_columns, size_t n_y, double ts,
                                    char delimiter, sdnid_dataset** out) {
  return guard([&] {
    SDNID_REQUIRE(path != nullptr && out != nullptr, "null argument");
    SDNID_REQUIRE(n_u > 0 && n_y > 0 && u_columns != nullptr && y_columns != nullptr,
                  "at least one input and one output column are required");
    *out = wrap(sdnid::data::load_csv(path, names(u_columns, n_u), names(y_columns, n_y), ts,
                                      delimiter));
    return SDNID_OK;
  });
}

sdnid_status sdnid_dataset_from_arrays(const double* u, const double* y, size_t length,
                                       size_t n_u, size_t n_y, double ts, sdnid_dataset** out) {
  return guard([&] {
    SDNID_REQUIRE(u != nullptr && y != nullptr && out != nullptr, "null argument");
    SDNID_REQUIRE(length > 0 && n_u > 0 && n_y > 0, "empty dimensions");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto k = static_cast<Eigen::Index>(length);
    Eigen::MatrixXd um = Eigen::Map<const RowMajor>(u, k, static_cast<Eigen::Index>(n_u));
    Eigen::MatrixXd ym = Eigen::Map<const RowMajor>(y, k, static_cast<Eigen::Index>(n_y));
    *out = wrap({sdnid::Signal(std::move(um), ts, default_names("u", static_cast<Eigen::Index>(n_u))),
                 sdnid::Signal(std::move(ym), ts, default_names("y", static_cast<Eigen::Index>(n_y)))});
    return SDNID_OK;
  });
}

sdnid_status sdnid_dataset_save_csv(const sdnid_dataset* data, const char* path, char delimiter) {
  return guard([&] {
    SDNID_REQUIRE(data != nullptr && path != nullptr, "null argument");
    sdnid::data::save_csv(path, data->value, delimiter);
    return SDNID_OK;
  });
}

sdnid_status sdnid_dataset_info(const sdnid_dataset* data, size_t* length, size_t* n_u,
                                size_t* n_y, double* ts) {
  return guard([&] {
    SDNID_REQUIRE(data != nullptr, "dataset is null");
    if (length != nullptr) *length = static_cast<size_t>(data->value.length());
    if (n_u != nullptr) *n_u = static_cast<size_t>(data->value.u.channels());
    if (n_y != nullptr) *n_y = static_cast<size_t>(data->value.y.channels());
    if (ts != nullptr) *ts = data->value.u.ts();
    return SDNID_OK;
  });
}

sdnid_status sdnid_dataset_copy_u(const sdnid_dataset* data, double* out, size_t cap) {
  return guard([&] {
    SDNID_REQUIRE(data != nullptr, "dataset is null");
    return copy_matrix(data->value.u.values(), out, cap);
  });
}

sdnid_status sdnid_dataset_copy_y(const sdnid_dataset* data, double* out, size_t cap) {
  return guard([&] {
    SDNID_REQUIRE(data != nullptr, "dataset is null");
    return copy_matrix(data->value.y.values(), out, cap);
  });
}

sdnid_status sdnid_dataset_slice(const sdnid_dataset* data, size_t begin, size_t end,
                                 sdnid_dataset** out) {
  return guard([&] {
    SDNID_REQUIRE(data != nullptr && out != nullptr, "null argument");
    *out = wrap(data->value.slice(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end)));
    return SDNID_OK;
  });
}

void sdnid_dataset_free(sdnid_dataset* data) { delete data; }

sdnid_status sdnid_split_fractions(const sdnid_dataset* data, double train, double val,
                                   double test, sdnid_dataset** train_out,
                                   sdnid_dataset** val_out, sdnid_dataset** test_out) {
  return guard([&] {
    SDNID_REQUIRE(data != nullptr && train_out != nullptr && val_out != nullptr &&
                      test_out != nullptr,
                  "null argument");
    sdnid::data::Splits s = sdnid::data::split_fractions(data->value, train, val, test);
    std::unique_ptr<sdnid_dataset> a(wrap(std::move(s.train)));
    std::unique_ptr<sdnid_dataset> b(wrap(std::move(s.val)));
    std::unique_ptr<sdnid_dataset> c(wrap(std::move(s.test)));
    *train_out = a.release();
    *val_out = b.release();
    *test_out = c.release();
    return SDNID_OK;
  });
}

sdnid_status sdnid_split_benchmark(const sdnid_dataset* test, size_t val_length,
                                   sdnid_dataset** val_out) {
  return guard([&] {
    SDNID_REQUIRE(test != nullptr && val_out != nullptr, "null argument");
    sdnid::data::Splits s =
        sdnid::data::split_benchmark(test->value, test->value, static_cast<Eigen::Index>(val_length));
    *val_out = wrap(std::move(s.val));
    return SDNID_OK;
  });
}

void sdnid_cts_defaults(sdnid_cts_params* params) {
  if (params == nullptr) return;
  const sdnid::data::CtsParams d;
  *params = {d.k1, d.k2, d.k3, d.k4, d.x_max, d.substeps};
}

void sdnid_excitation_defaults(sdnid_excitation* excitation) {
  if (excitation == nullptr) return;
  *excitation = {4.0, 10, 60};
}

sdnid_status sdnid_make_cts(const sdnid_cts_params* params, const sdnid_excitation* excitation,
                            size_t length, double ts, double snr_db, uint64_t seed,
                            sdnid_dataset** out) {
  return guard([&] {
    SDNID_REQUIRE(params != nullptr && excitation != nullptr && out != nullptr, "null argument");
    SDNID_REQUIRE(length > 0, "length must be > 0");
    const sdnid::data::CtsParams p{params->k1, params->k2, params->k3,
                                   params->k4, params->x_max, params->substeps};
    sdnid::Signal u = sdnid::data::random_steps(static_cast<Eigen::Index>(length), ts,
                                                excitation->u_max, excitation->hold_min,
                                                excitation->hold_max, seed);
    // Separate stream for the noise so the input does not depend on the SNR.
    sdnid::data::CtsRun run =
        sdnid::data::cts_oracle(u, p, Eigen::Vector2d::Zero(), snr_db, seed + 0x5bd1e995ULL);
    *out = wrap({std::move(u), std::move(run.y)});
    return SDNID_OK;
  });
}

sdnid_status sdnid_train(const sdnid_config* config, const sdnid_dataset* train,
                         const sdnid_dataset* val, const sdnid_dataset* test,
                         const char* history_path, char delimiter, sdnid_model** model_out,
                         sdnid_train_report* report) {
  return guard([&] {
    SDNID_REQUIRE(config != nullptr && train != nullptr && val != nullptr, "null argument");
    sdnid::data::Splits splits{train->value, val->value, test != nullptr ? test->value : val->value};
    const sdnid::RunConfig& cfg = config->value;
    std::unique_ptr<sdnid::data::TableWriter> history;
    if (history_path != nullptr) {
      const int entries = cfg.tau_kind == sdnid::TauKind::kVector ? cfg.nx : 1;
      history = std::make_unique<sdnid::data::TableWriter>(
          history_path, sdnid::train::history_header(entries), delimiter);
    }
    const sdnid::train::HistoryCallback on_row = [&](const sdnid::train::HistoryRow& row) {
      if (history) history->row(sdnid::train::history_values(row));
    };
    const sdnid::PipelineResult r = sdnid::run_pipeline(splits, cfg, on_row);

    if (report != nullptr) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      report->train_rmse = r.train_eval.rmse;
      report->val_rmse = r.val_eval.rmse;
      report->test_rmse = test != nullptr ? r.test_eval.rmse : nan;
      report->steps_run = r.fit.steps_run;
      report->best_step = r.fit.best_step;
      report->skipped_steps = r.fit.skipped;
      report->early_stopped = r.fit.early_stopped ? 1 : 0;
      report->initial_tau = r.tau.raw_tau;
      report->bla_tau = r.tau.bla_tau;
      report->bla_tustin_fallback = r.tau.bla_tustin_fallback ? 1 : 0;
      const Eigen::VectorXd ratio =
          sdnid::train::effective_ratio(r.model, cfg.ts, cfg.tau_epsilon());
      report->ratio_mean = ratio.mean();
      report->ratio_min = ratio.minCoeff();
      report->ratio_max = ratio.maxCoeff();
    }
    if (model_out != nullptr) {
      sdnid::io::Checkpoint c;
      c.params = r.model;
      c.config = cfg;
      c.u_scaler = r.scalers.u;
      c.y_scaler = r.scalers.y;
      c.u_names = train->value.u.names();
      c.y_names = train->value.y.names();
      c.tau_trainable = r.tau.trainable;
      *model_out = new sdnid_model{std::move(c)};
    }
    return SDNID_OK;
  });
}

sdnid_status sdnid_sweep(const sdnid_config* config, const sdnid_dataset* train,
                         const sdnid_dataset* val, const sdnid_dataset* test, const double* grid,
                         size_t n_grid, int seeds, long budget, int workers,
                         const char* table_path, char delimiter, double* chosen_ratio,
                         sdnid_sweep_row* rows, double* median_val) {
  return guard([&] {
    SDNID_REQUIRE(config != nullptr && train != nullptr && val != nullptr && grid != nullptr,
                  "null argument");
    sdnid::data::Splits splits{train->value, val->value, test != nullptr ? test->value : val->value};
    const std::vector<double> g(grid, grid + n_grid);
    const int w = workers > 0 ? workers : sdnid::sdn::workers_from_env();
    const sdnid::sdn::SweepResult r =
        sdnid::sdn::cross_validate_tau(splits, config->value, g, seeds, budget, w);
    if (table_path != nullptr) sdnid::sdn::write_sweep_table(table_path, r, delimiter);
    if (chosen_ratio != nullptr) *chosen_ratio = r.chosen_ratio();
    if (rows != nullptr) {
      for (size_t i = 0; i < r.runs.size(); ++i) {
        const auto& run = r.runs[i];
        rows[i] = {run.ratio, run.seed, run.val_rmse,
                   test != nullptr ? run.test_rmse : std::numeric_limits<double>::quiet_NaN(),
                   run.diverged ? 1 : 0};
      }
    }
    if (median_val != nullptr) {
      for (size_t i = 0; i < r.median_val.size(); ++i) median_val[i] = r.median_val[i];
    }
    return SDNID_OK;
  });
}

sdnid_status sdnid_estimate_bla(const sdnid_dataset* data, int order, int lag, int zscore,
                                const char* model_path, sdnid_bla_report* report) {
  return guard([&] {
    SDNID_REQUIRE(data != nullptr, "dataset is null");
    sdnid::Signal u = data->value.u;
    sdnid::Signal y = data->value.y;
    if (zscore != 0) {
      u = sdnid::data::Scaler::fit(u).apply(u);
      y = sdnid::data::Scaler::fit(y).apply(y);
    }
    const sdnid::bla::TauEstimate est = sdnid::bla::estimate_tau(u, y, order, lag);
    if (model_path != nullptr) {
      sdnid::io::write_file(model_path, sdnid::io::linear_to_text(est.fit.continuous, u.ts()));
    }
    if (report != nullptr) {
      report->tau = est.tau;
      report->ratio = u.ts() / est.tau;
      report->order = est.fit.continuous.order();
      report->tustin_fallback = est.fit.continuous.tustin_fallback ? 1 : 0;
      report->stable = est.fit.continuous.stable ? 1 : 0;
    }
    return SDNID_OK;
  });
}

sdnid_status sdnid_model_save(const sdnid_model* model, const char* path) {
  return guard([&] {
    SDNID_REQUIRE(model != nullptr && path != nullptr, "null argument");
    sdnid::io::save_checkpoint(path, model->value);
    return SDNID_OK;
  });
}

sdnid_status sdnid_model_load(const char* path, sdnid_model** out) {
  return guard([&] {
    SDNID_REQUIRE(path != nullptr && out != nullptr, "null argument");
    *out = new sdnid_model{sdnid::io::load_checkpoint(path)};
    return SDNID_OK;
  });
}

sdnid_status sdnid_model_set_manifest(sdnid_model* model, const char* manifest_path) {
  return guard([&] {
    SDNID_REQUIRE(model != nullptr && manifest_path != nullptr, "null argument");
    model->value.manifest = manifest_path;
    return SDNID_OK;
  });
}

sdnid_status sdnid_model_info(const sdnid_model* model, size_t* n_u, size_t* n_y, size_t* lag,
                              double* ratio_mean) {
  return guard([&] {
    SDNID_REQUIRE(model != nullptr, "model is null");
    const auto& p = model->value.params;
    if (n_u != nullptr) *n_u = static_cast<size_t>(p.dims.nu);
    if (n_y != nullptr) *n_y = static_cast<size_t>(p.dims.ny);
    if (lag != nullptr) *lag = static_cast<size_t>(p.dims.lag());
    if (ratio_mean != nullptr) {
      const auto& c = model->value.config;
      *ratio_mean = sdnid::train::effective_ratio(p, c.ts, c.tau_epsilon()).mean();
    }
    return SDNID_OK;
  });
}

sdnid_status sdnid_model_config(const sdnid_model* model, sdnid_config** out) {
  return guard([&] {
    SDNID_REQUIRE(model != nullptr && out != nullptr, "null argument");
    *out = new sdnid_config{model->value.config};
    return SDNID_OK;
  });
}

sdnid_status sdnid_model_simulate(const sdnid_model* model, const sdnid_dataset* data,
                                  double* out, size_t cap, size_t* rows, double* rmse) {
  return guard([&] {
    SDNID_REQUIRE(model != nullptr && data != nullptr, "null argument");
    const sdnid::io::Checkpoint& c = model->value;
    if (data->value.u.channels() != c.params.dims.nu ||
        data->value.y.channels() != c.params.dims.ny) {
      return fail(SDNID_E_SHAPE_MISMATCH, "dataset channels do not match the model");
    }
    const sdnid::train::Prepared p = sdnid::train::prepare(data->value, c.u_scaler, c.y_scaler);
    const sdnid::train::Evaluation ev = sdnid::train::evaluate(c.params, p, c.y_scaler, c.config);
    if (ev.diverged) return fail(SDNID_E_DIVERGED, "free-run simulation diverged");
    if (rows != nullptr) *rows = static_cast<size_t>(ev.prediction.rows());
    if (rmse != nullptr) *rmse = ev.rmse;
    if (out == nullptr && cap == 0) return SDNID_OK;
    return copy_matrix(ev.prediction, out, cap);
  });
}

void sdnid_model_free(sdnid_model* model) { delete model; }

sdnid_status sdnid_file_sha256(const char* path, char out[65]) {
  return guard([&] {
    SDNID_REQUIRE(path != nullptr && out != nullptr, "null argument");
    const std::string h = sdnid::file_sha256_hex(path);
    std::memcpy(out, h.c_str(), 65);
    return SDNID_OK;
  });
}

sdnid_status sdnid_manifest_write(const char* path, const char* command,
                                  const sdnid_config* config, const char* const* inputs,
                                  size_t n_inputs, const char* const* output_roles,
                                  const char* const* output_paths, size_t n_outputs,
                                  const char* const* note_keys, const char* const* note_values,
                                  size_t n_notes) {
  return guard([&] {
    SDNID_REQUIRE(path != nullptr && command != nullptr && config != nullptr, "null argument");
    sdnid::io::Manifest m;
    m.command = command;
    m.config = config->value;
    m.revision = SDNID_REVISION_STRING;
    for (size_t i = 0; i < n_inputs; ++i) {
      m.inputs[inputs[i]] = sdnid::file_sha256_hex(inputs[i]);
    }
    for (size_t i = 0; i < n_outputs; ++i) m.outputs[output_roles[i]] = output_paths[i];
    for (size_t i = 0; i < n_notes; ++i) m.notes[note_keys[i]] = note_values[i];
    sdnid::io::save_manifest(path, m);
    return SDNID_OK;
  });
}

}  // extern "C"
