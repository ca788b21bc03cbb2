#pragma once

// Fixed-step classical RK4 on the normalized field (1/tau) f, with the input
// held constant (zero-order hold) across all four stages.
//
// The effective step per state is dt_i = h / tau_i. Writing the scaled field
// this way makes "scale the field by 1/tau" and "integrate the unscaled field
// on a grid of spacing h/tau" the same floating-point computation.

#include <functional>

#include <Eigen/Dense>

#include "autodiff.hpp"
#include "signal.hpp"

namespace sdnid::ode {

struct StepSpec {
  double h = 1.0;
  // Effective normalization per state, or a single entry broadcast to all.
  Eigen::VectorXd tau = Eigen::VectorXd::Ones(1);
  int substeps = 1;
  // Any state entry above this magnitude aborts the rollout.
  double divergence_limit = 1e9;

  void validate() const;
  // (h / substeps) / tau, elementwise.
  Eigen::VectorXd dt() const;
};

using Field = std::function<Eigen::VectorXd(const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& u)>;

Eigen::VectorXd rk4_step(const Field& f, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, const StepSpec& spec, long step = 0);

// Row j of `inputs` is u_j. Returns (J + 1) x n_x, row 0 is x0.
Eigen::MatrixXd simulate(const Field& f, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& inputs, const StepSpec& spec);

using TapedField = std::function<ad::Var(ad::Var x, ad::Var u)>;

// Taped RK4 over column batches. `dt` is (n_x x 1) or (1 x 1) and is usually
// h / max(eps, tau) built on the same tape so tau receives a gradient.
ad::Var rk4_step(ad::Tape& tape, const TapedField& f, ad::Var x, ad::Var u,
                 ad::Var dt, int substeps = 1, double divergence_limit = 1e9,
                 long step = 0);

// Same samples on a grid of spacing ts / tau. The number of samples is kept.
Signal rescale_grid(const Signal& signal, double tau);

}  // namespace sdnid::ode
