#ifndef SDNID_H
#define SDNID_H

/*
 * C interface to the sdnid library: continuous-time neural state-space
 * identification with state-derivative normalization.
 *
 * Every function returns an sdnid_status. On failure the message is available
 * from sdnid_last_error() on the calling thread until the next call.
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function (NULL is accepted).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(SDNID_BUILDING)
#define SDNID_API __attribute__((visibility("default")))
#else
#define SDNID_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdnid_status {
  SDNID_OK = 0,
  SDNID_E_INVALID_ARGUMENT = 1,
  SDNID_E_SHAPE_MISMATCH = 2,
  SDNID_E_NON_FINITE = 3,
  SDNID_E_DIVERGED = 4,
  SDNID_E_DEGENERATE = 5,
  SDNID_E_RANK_DEFICIENT = 6,
  SDNID_E_DATA = 7,
  SDNID_E_IO = 8,
  SDNID_E_TRAINING_FAILED = 9,
  SDNID_E_SWEEP_FAILED = 10,
  SDNID_E_BUFFER_TOO_SMALL = 11,
  SDNID_E_INTERNAL = 12
} sdnid_status;

typedef struct sdnid_config sdnid_config;
typedef struct sdnid_dataset sdnid_dataset;
typedef struct sdnid_model sdnid_model;

SDNID_API const char* sdnid_version(void);
SDNID_API const char* sdnid_source_revision(void);
SDNID_API const char* sdnid_last_error(void);
SDNID_API const char* sdnid_status_name(sdnid_status status);

/* Copies a string result into buf. *needed (if non-NULL) receives the length
 * including the terminator; SDNID_E_BUFFER_TOO_SMALL when cap is short. */

/* ---- configuration ---- */

SDNID_API sdnid_status sdnid_config_create(sdnid_config** out);
SDNID_API sdnid_status sdnid_config_copy(const sdnid_config* config, sdnid_config** out);
SDNID_API void sdnid_config_free(sdnid_config* config);
/* Flat "key = value" file layered over the current values. */
SDNID_API sdnid_status sdnid_config_load(sdnid_config* config, const char* path);
SDNID_API sdnid_status sdnid_config_set(sdnid_config* config, const char* key, const char* value);
SDNID_API sdnid_status sdnid_config_get(const sdnid_config* config, const char* key, char* buf,
                                        size_t cap, size_t* needed);
SDNID_API sdnid_status sdnid_config_text(const sdnid_config* config, char* buf, size_t cap,
                                         size_t* needed);
SDNID_API sdnid_status sdnid_config_validate(const sdnid_config* config);

/* ---- datasets: one input signal and one output signal on a shared grid ---- */

SDNID_API sdnid_status sdnid_dataset_load_csv(const char* path, const char* const* u_columns,
                                              size_t n_u, const char* const* y_columns,
                                              size_t n_y, double ts, char delimiter,
                                              sdnid_dataset** out);
/* u is length x n_u, y is length x n_y, both row-major. */
SDNID_API sdnid_status sdnid_dataset_from_arrays(const double* u, const double* y, size_t length,
                                                 size_t n_u, size_t n_y, double ts,
                                                 sdnid_dataset** out);
SDNID_API sdnid_status sdnid_dataset_save_csv(const sdnid_dataset* data, const char* path,
                                              char delimiter);
SDNID_API sdnid_status sdnid_dataset_info(const sdnid_dataset* data, size_t* length, size_t* n_u,
                                          size_t* n_y, double* ts);
/* Row-major copies; cap counts doubles. */
SDNID_API sdnid_status sdnid_dataset_copy_u(const sdnid_dataset* data, double* out, size_t cap);
SDNID_API sdnid_status sdnid_dataset_copy_y(const sdnid_dataset* data, double* out, size_t cap);
SDNID_API sdnid_status sdnid_dataset_slice(const sdnid_dataset* data, size_t begin, size_t end,
                                           sdnid_dataset** out);
SDNID_API void sdnid_dataset_free(sdnid_dataset* data);

/* Contiguous train / validation / test pieces by fraction of the record. */
SDNID_API sdnid_status sdnid_split_fractions(const sdnid_dataset* data, double train, double val,
                                             double test, sdnid_dataset** train_out,
                                             sdnid_dataset** val_out, sdnid_dataset** test_out);
/* Benchmark protocol: validation is the first val_length samples of the test record. */
SDNID_API sdnid_status sdnid_split_benchmark(const sdnid_dataset* test, size_t val_length,
                                             sdnid_dataset** val_out);

/* ---- synthetic cascaded tanks ---- */

typedef struct sdnid_cts_params {
  double k1, k2, k3, k4;
  double x_max;
  int substeps;
} sdnid_cts_params;

typedef struct sdnid_excitation {
  double u_max;  /* step levels drawn from [0, u_max]; 0 gives an all-zero input */
  int hold_min;  /* samples */
  int hold_max;
} sdnid_excitation;

SDNID_API void sdnid_cts_defaults(sdnid_cts_params* params);
SDNID_API void sdnid_excitation_defaults(sdnid_excitation* excitation);
/* snr_db = INFINITY disables noise. */
SDNID_API sdnid_status sdnid_make_cts(const sdnid_cts_params* params,
                                      const sdnid_excitation* excitation, size_t length,
                                      double ts, double snr_db, uint64_t seed,
                                      sdnid_dataset** out);

/* ---- training ---- */

typedef struct sdnid_train_report {
  double train_rmse; /* original output units; INFINITY when the rollout diverged */
  double val_rmse;
  double test_rmse;
  long steps_run;
  long best_step;
  long skipped_steps;
  int early_stopped;
  double initial_tau;     /* seconds */
  double bla_tau;         /* NaN unless the BLA mode was used */
  int bla_tustin_fallback;
  double ratio_mean;      /* mean effective T_s / tau of the returned model */
  double ratio_min;
  double ratio_max;
} sdnid_train_report;

/* Scalers come from `train` only. `test` may be NULL. history_path may be NULL;
 * otherwise one row per optimization step is written there. */
SDNID_API sdnid_status sdnid_train(const sdnid_config* config, const sdnid_dataset* train,
                                   const sdnid_dataset* val, const sdnid_dataset* test,
                                   const char* history_path, char delimiter,
                                   sdnid_model** model_out, sdnid_train_report* report);

typedef struct sdnid_sweep_row {
  double ratio;
  uint64_t seed;
  double val_rmse;
  double test_rmse;
  int diverged;
} sdnid_sweep_row;

/* rows may be NULL; otherwise it must hold n_grid * seeds entries. medians may
 * be NULL or hold n_grid entries. workers <= 0 reads SDNID_WORKERS. */
SDNID_API sdnid_status sdnid_sweep(const sdnid_config* config, const sdnid_dataset* train,
                                   const sdnid_dataset* val, const sdnid_dataset* test,
                                   const double* grid, size_t n_grid, int seeds, long budget,
                                   int workers, const char* table_path, char delimiter,
                                   double* chosen_ratio, sdnid_sweep_row* rows,
                                   double* median_val);

/* ---- best linear approximation ---- */

typedef struct sdnid_bla_report {
  double tau;   /* seconds */
  double ratio; /* T_s / tau */
  int order;
  int tustin_fallback;
  int stable;
} sdnid_bla_report;

/* zscore != 0 standardizes u and y first. model_path may be NULL. */
SDNID_API sdnid_status sdnid_estimate_bla(const sdnid_dataset* data, int order, int lag,
                                          int zscore, const char* model_path,
                                          sdnid_bla_report* report);

/* ---- models ---- */

SDNID_API sdnid_status sdnid_model_save(const sdnid_model* model, const char* path);
SDNID_API sdnid_status sdnid_model_load(const char* path, sdnid_model** out);
SDNID_API sdnid_status sdnid_model_set_manifest(sdnid_model* model, const char* manifest_path);
SDNID_API sdnid_status sdnid_model_info(const sdnid_model* model, size_t* n_u, size_t* n_y,
                                        size_t* lag, double* ratio_mean);
SDNID_API sdnid_status sdnid_model_config(const sdnid_model* model, sdnid_config** out);
/* Free-run simulation on `data`: the encoder sees samples 0 .. lag-1 only.
 * out receives (length - lag) x n_y predictions (row-major, original units);
 * cap counts doubles. rmse may be NULL. */
SDNID_API sdnid_status sdnid_model_simulate(const sdnid_model* model, const sdnid_dataset* data,
                                            double* out, size_t cap, size_t* rows,
                                            double* rmse);
SDNID_API void sdnid_model_free(sdnid_model* model);

/* ---- provenance ---- */

/* out receives 64 hex digits and a terminator. */
SDNID_API sdnid_status sdnid_file_sha256(const char* path, char out[65]);
/* Records the config, seed, source revision, SHA-256 of every input file and
 * the produced outputs (role/path pairs). Notes are free key/value pairs. */
SDNID_API sdnid_status sdnid_manifest_write(const char* path, const char* command,
                                            const sdnid_config* config,
                                            const char* const* inputs, size_t n_inputs,
                                            const char* const* output_roles,
                                            const char* const* output_paths, size_t n_outputs,
                                            const char* const* note_keys,
                                            const char* const* note_values, size_t n_notes);

#ifdef __cplusplus
}
#endif

#endif
