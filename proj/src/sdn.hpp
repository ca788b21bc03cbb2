#pragma once

// Normalization factor tau and its estimators.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "config.hpp"

namespace sdnid::sdn {

struct NormFactor {
  TauKind kind = TauKind::kVector;
  Eigen::VectorXd raw = Eigen::VectorXd::Ones(1);  // seconds, unclamped
  double epsilon = 1e-6;
  bool trainable = false;

  // max(epsilon, raw) elementwise; a scalar factor is broadcast to `nx`
  // entries when nx > 0.
  Eigen::VectorXd effective(int nx = 0) const;
};

Eigen::VectorXd effective_tau(const NormFactor& nf, int nx = 0);

// var(z) = mean over samples of ||z_k||^2 / n. Rows of `z` are samples.
double trajectory_variance(const Eigen::MatrixXd& z);

// sqrt(var(x) / var(xdot)). Needs >= 2 samples of equal count and a
// non-constant derivative (kDegenerate otherwise).
double tau_from_variances(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xdot);

struct NormalizeCheck {
  double gamma;
  double tau;
  double state_variance;       // var(x / gamma)
  double derivative_variance;  // var(tau * xdot / gamma)
};

// Executable form of the existence result: with gamma = sqrt(var(x)) and
// tau = sqrt(var(x) / var(xdot)) both normalized variances equal one.
NormalizeCheck normalize_check(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xdot);

// Angular frequency of DFT bin m for an N-periodic record; bins above N/2 are
// the negative-frequency images m - N.
double bin_frequency(long m, long n, double ts);

// tau = sqrt(sum_m |G_m U_m|^2 / sum_m w_m^2 |G_m U_m|^2) over bins m = 0..N-1.
// `input[m]` is U_m (n_u), `frf[m]` is G(j w_m) (n_x x n_u).
double tau_frequency_domain(const std::vector<Eigen::VectorXcd>& input,
                            const std::vector<Eigen::MatrixXcd>& frf, double ts, long n);
// Single-input, single-state form.
double tau_frequency_domain(const std::vector<std::complex<double>>& input,
                            const std::vector<std::complex<double>>& frf, double ts, long n);

// DFT of a real record, U_m = sum_k u_k exp(-j 2 pi m k / N).
std::vector<std::complex<double>> dft(const Eigen::VectorXd& samples);

}  // namespace sdnid::sdn
