#pragma once

// Best linear approximation from sampled input/output data:
//   1. ARX(p) fit by linear least squares,
//   2. order-n balanced realization of the ARX impulse response (Ho-Kalman),
//   3. continuous-time conversion by the inverse zero-order-hold map
//      A_c = log(A_d) / T_s with B_c from the ZOH input integral.
// The continuous model then yields state and state-derivative trajectories for
// the variance-ratio estimate of tau.

#include <Eigen/Dense>

#include "signal.hpp"

namespace sdnid::bla {

struct LinearSS {
  Eigen::MatrixXd A, B, C, D;
  // Set when A_d had an eigenvalue on the closed negative real axis and the
  // bilinear (Tustin) inverse was used instead of the matrix logarithm.
  bool tustin_fallback = false;
  // A Hurwitz.
  bool stable = true;

  int order() const { return static_cast<int>(A.rows()); }
};

struct DiscreteSS {
  Eigen::MatrixXd A, B, C, D;
  double ts = 1.0;
};

struct BlaFit {
  LinearSS continuous;
  DiscreteSS discrete;  // realization before conversion
  Eigen::MatrixXd arx;  // stacked ARX coefficients, (p (ny + nu)) x ny
};

// Exact ZOH discretization via the augmented matrix exponential.
DiscreteSS zoh_discretize(const LinearSS& model, double ts);

// Throws kRankDeficient when the lagged-input regressors are not full rank
// (input not persistently exciting of order `lag`).
BlaFit fit_bla(const Signal& u, const Signal& y, int order, int lag);

struct BlaStates {
  Eigen::MatrixXd x;     // K x n, x_0 = 0
  Eigen::MatrixXd xdot;  // A x_k + B u_k
};

// Simulates the continuous model under ZOH input on the sampling grid of `u`.
BlaStates bla_states(const LinearSS& model, const Signal& u, double divergence_limit = 1e9);

struct TauEstimate {
  double tau = 0.0;  // seconds
  BlaFit fit;
};

TauEstimate estimate_tau(const Signal& u, const Signal& y, int order, int lag);
double tau_bla(const Signal& u, const Signal& y, int order, int lag);

}  // namespace sdnid::bla
