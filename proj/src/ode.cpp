#include "ode.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "error.hpp"

namespace sdnid::ode {
namespace {

void guard(const Eigen::MatrixXd& value, double limit, long step, int stage) {
  if (!ad::all_finite(value) || value.cwiseAbs().maxCoeff() > limit) {
    throw DivergenceError(step, stage,
                          "integration diverged at step " + std::to_string(step) +
                              ", RK4 stage " + std::to_string(stage));
  }
}

Eigen::VectorXd scaled(const Eigen::VectorXd& k, const Eigen::VectorXd& s) {
  if (s.size() == 1) return k * s(0);
  return k.cwiseProduct(s);
}

}  // namespace

void StepSpec::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::kInvalidArgument, "step size must be positive");
  }
  if (tau.size() == 0 || !tau.allFinite() || (tau.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "derivative scale must be finite and positive");
  }
  if (substeps < 1) {
    throw Error(ErrorCode::kInvalidArgument, "substeps must be at least 1");
  }
}

Eigen::VectorXd StepSpec::dt() const {
  const double hs = h / static_cast<double>(substeps);
  return (hs / tau.array()).matrix();
}

Eigen::VectorXd rk4_step(const Field& f, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, const StepSpec& spec, long step) {
  spec.validate();
  if (spec.tau.size() != 1 && spec.tau.size() != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tau length does not match state dimension");
  }
  const Eigen::VectorXd dt = spec.dt();
  const Eigen::VectorXd half = dt * 0.5;
  const Eigen::VectorXd sixth = dt * (1.0 / 6.0);

  Eigen::VectorXd state = x;
  for (int s = 0; s < spec.substeps; ++s) {
    const Eigen::VectorXd k1 = f(state, u);
    guard(k1, std::numeric_limits<double>::infinity(), step, 1);
    const Eigen::VectorXd x2 = state + scaled(k1, half);
    guard(x2, spec.divergence_limit, step, 2);
    const Eigen::VectorXd k2 = f(x2, u);
    const Eigen::VectorXd x3 = state + scaled(k2, half);
    guard(x3, spec.divergence_limit, step, 3);
    const Eigen::VectorXd k3 = f(x3, u);
    const Eigen::VectorXd x4 = state + scaled(k3, dt);
    guard(x4, spec.divergence_limit, step, 4);
    const Eigen::VectorXd k4 = f(x4, u);
    Eigen::VectorXd acc = k1 + k2 * 2.0;
    acc = acc + k3 * 2.0;
    acc = acc + k4;
    state = state + scaled(acc, sixth);
    guard(state, spec.divergence_limit, step, 0);
  }
  return state;
}

Eigen::MatrixXd simulate(const Field& f, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& inputs, const StepSpec& spec) {
  spec.validate();
  const Eigen::Index steps = inputs.rows();
  Eigen::MatrixXd traj(steps + 1, x0.size());
  traj.row(0) = x0.transpose();
  Eigen::VectorXd x = x0;
  for (Eigen::Index j = 0; j < steps; ++j) {
    x = rk4_step(f, x, inputs.row(j).transpose(), spec, static_cast<long>(j));
    traj.row(j + 1) = x.transpose();
  }
  return traj;
}

ad::Var rk4_step(ad::Tape& tape, const TapedField& f, ad::Var x, ad::Var u,
                 ad::Var dt, int substeps, double divergence_limit, long step) {
  const ad::Var half = tape.scale(dt, 0.5);
  const ad::Var sixth = tape.scale(dt, 1.0 / 6.0);
  const double inf = std::numeric_limits<double>::infinity();

  ad::Var state = x;
  for (int s = 0; s < substeps; ++s) {
    const ad::Var k1 = f(state, u);
    guard(tape.value(k1), inf, step, 1);
    const ad::Var x2 = tape.add(state, tape.scale_rows(k1, half));
    guard(tape.value(x2), divergence_limit, step, 2);
    const ad::Var k2 = f(x2, u);
    const ad::Var x3 = tape.add(state, tape.scale_rows(k2, half));
    guard(tape.value(x3), divergence_limit, step, 3);
    const ad::Var k3 = f(x3, u);
    const ad::Var x4 = tape.add(state, tape.scale_rows(k3, dt));
    guard(tape.value(x4), divergence_limit, step, 4);
    const ad::Var k4 = f(x4, u);
    ad::Var acc = tape.add(k1, tape.scale(k2, 2.0));
    acc = tape.add(acc, tape.scale(k3, 2.0));
    acc = tape.add(acc, k4);
    state = tape.add(state, tape.scale_rows(acc, sixth));
    guard(tape.value(state), divergence_limit, step, 0);
  }
  return state;
}

Signal rescale_grid(const Signal& signal, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::kInvalidArgument, "rescale_grid: tau must be positive");
  }
  return signal.with_ts(signal.ts() / tau);
}

}  // namespace sdnid::ode
