#pragma once

#include <limits>

#include "config.hpp"
#include "data.hpp"
#include "nn.hpp"
#include "train.hpp"

namespace sdnid {

struct TauResolution {
  double raw_tau = 0.0;  // seconds, initial value for every entry
  bool trainable = false;
  double bla_tau = std::numeric_limits<double>::quiet_NaN();  // set in BLA mode
  bool bla_tustin_fallback = false;
};

// Scalers come from the training split only.
struct Scalers {
  data::Scaler u;
  data::Scaler y;

  static Scalers fit(const data::IoData& train);
};

// BLA mode estimates tau on the z-scored training split.
TauResolution resolve_tau(const RunConfig& config, const data::IoData& train,
                          const Scalers& scalers);

struct PipelineResult {
  nn::ModelParams model;  // best-validation checkpoint
  train::FitResult fit;
  Scalers scalers;
  TauResolution tau;
  train::Evaluation train_eval, val_eval, test_eval;
};

PipelineResult run_pipeline(const data::Splits& splits, const RunConfig& config,
                            const train::HistoryCallback& on_row = {});

}  // namespace sdnid
