#include "pipeline.hpp"

#include "bla.hpp"
#include "error.hpp"

namespace sdnid {

Scalers Scalers::fit(const data::IoData& train) {
  return {data::Scaler::fit(train.u), data::Scaler::fit(train.y)};
}

TauResolution resolve_tau(const RunConfig& config, const data::IoData& train,
                          const Scalers& scalers) {
  TauResolution r;
  switch (config.tau_mode) {
    case TauMode::kFixed:
      r.raw_tau = config.ts / config.tau_init_ratio;
      break;
    case TauMode::kTrainable:
      r.raw_tau = config.ts / config.tau_init_ratio;
      r.trainable = true;
      break;
    case TauMode::kBla: {
      const bla::TauEstimate est = bla::estimate_tau(scalers.u.apply(train.u),
                                                     scalers.y.apply(train.y),
                                                     config.bla_order, config.bla_lag);
      r.raw_tau = est.tau;
      r.bla_tau = est.tau;
      r.bla_tustin_fallback = est.fit.continuous.tustin_fallback;
      break;
    }
  }
  return r;
}

PipelineResult run_pipeline(const data::Splits& splits, const RunConfig& config,
                            const train::HistoryCallback& on_row) {
  config.validate();
  PipelineResult out;
  out.scalers = Scalers::fit(splits.train);
  out.tau = resolve_tau(config, splits.train, out.scalers);

  const int nu = static_cast<int>(splits.train.u.channels());
  const int ny = static_cast<int>(splits.train.y.channels());
  nn::ModelParams init = nn::init_params(config, nu, ny);
  init.at(init.tau).setConstant(out.tau.raw_tau);

  const train::Prepared tr = train::prepare(splits.train, out.scalers.u, out.scalers.y);
  const train::Prepared va = train::prepare(splits.val, out.scalers.u, out.scalers.y);
  const train::Prepared te = train::prepare(splits.test, out.scalers.u, out.scalers.y);

  out.fit = train::fit(init, tr, va, out.scalers.y, config, out.tau.trainable, on_row);
  out.model = out.fit.best;
  out.train_eval = train::evaluate(out.model, tr, out.scalers.y, config);
  out.val_eval = train::evaluate(out.model, va, out.scalers.y, config);
  out.test_eval = train::evaluate(out.model, te, out.scalers.y, config);
  return out;
}

}  // namespace sdnid
