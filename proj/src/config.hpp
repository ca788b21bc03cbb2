#pragma once

#include <string>
#include <utility>
#include <vector>

namespace sdnid {

enum class TauMode { kFixed, kTrainable, kBla };
enum class TauKind { kScalar, kVector };

// Every hyperparameter of the training pipeline. Defaults are the published
// cascaded-tanks settings.
struct RunConfig {
  int nx = 4;
  int na = 5;
  int nb = 5;
  int hidden = 64;
  int depth = 2;
  bool output_uses_input = true;

  int batch = 64;
  int seq_len = 128;
  long max_steps = 20000;
  std::vector<std::pair<long, double>> lr_schedule{{0, 0.003}, {1000, 0.0009}, {3000, 0.00027}};
  double weight_decay = 1e-8;
  double lambda_n = 1e12;
  double lambda_d = 1e3;
  long patience = 2000;
  long val_interval = 50;

  double ts = 4.0;
  TauMode tau_mode = TauMode::kTrainable;
  TauKind tau_kind = TauKind::kVector;
  // T_s / tau used for initialization (trainable) or held fixed (fixed).
  double tau_init_ratio = 0.1;
  // Clamp floor epsilon = tau_eps_factor * ts.
  double tau_eps_factor = 1e-6;
  int substeps = 1;
  double divergence_limit = 1e9;

  int bla_order = 2;
  int bla_lag = 10;

  unsigned long long seed = 1;

  double tau_epsilon() const { return tau_eps_factor * ts; }
  double learning_rate(long step) const;
  int lag_window() const { return na > nb ? na : nb; }

  // Throws kInvalidArgument naming the offending field.
  void validate() const;

  // Assigns one field from its textual form. Unknown keys are rejected.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static std::vector<std::string> keys();

  // Canonical "key = value" listing of every field, one per line.
  std::string to_text() const;
  // Hex SHA-256 prefix of to_text().
  std::string hash() const;
};

// Flat "key = value" text, '#' starts a comment.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

const char* to_string(TauMode mode);
const char* to_string(TauKind kind);

}  // namespace sdnid
