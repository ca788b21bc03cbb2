#include "sdn.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "error.hpp"

namespace sdnid::sdn {

Eigen::VectorXd NormFactor::effective(int nx) const {
  Eigen::VectorXd out = raw.array().max(epsilon).matrix();
  if (nx > 0 && out.size() == 1) return Eigen::VectorXd::Constant(nx, out(0));
  return out;
}

Eigen::VectorXd effective_tau(const NormFactor& nf, int nx) { return nf.effective(nx); }

double trajectory_variance(const Eigen::MatrixXd& z) {
  if (z.rows() < 1 || z.cols() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "variance of an empty trajectory");
  }
  return z.squaredNorm() / static_cast<double>(z.rows() * z.cols());
}

double tau_from_variances(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xdot) {
  if (x.rows() != xdot.rows() || x.cols() != xdot.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "state and derivative trajectories differ in shape");
  }
  if (x.rows() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two samples");
  }
  const double vx = trajectory_variance(x);
  const double vdx = trajectory_variance(xdot);
  if (!(vdx > 0.0) || !(vx > 0.0)) {
    throw Error(ErrorCode::kDegenerate, "state trajectory is constant");
  }
  return std::sqrt(vx / vdx);
}

NormalizeCheck normalize_check(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xdot) {
  const double tau = tau_from_variances(x, xdot);
  const double gamma = std::sqrt(trajectory_variance(x));
  return {gamma, tau, trajectory_variance(x / gamma),
          trajectory_variance((tau / gamma) * xdot)};
}

double bin_frequency(long m, long n, double ts) {
  const long k = (2 * m > n) ? m - n : m;
  return 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(n) * ts);
}

double tau_frequency_domain(const std::vector<Eigen::VectorXcd>& input,
                            const std::vector<Eigen::MatrixXcd>& frf, double ts, long n) {
  if (input.size() != frf.size() || static_cast<long>(input.size()) != n || n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "spectra must cover all N bins");
  }
  if (!(ts > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ts must be positive");
  double num = 0.0;
  double den = 0.0;
  for (long m = 0; m < n; ++m) {
    const Eigen::VectorXcd x = frf[static_cast<std::size_t>(m)] * input[static_cast<std::size_t>(m)];
    const double power = x.squaredNorm();
    const double w = bin_frequency(m, n, ts);
    num += power;
    den += w * w * power;
  }
  if (!(den > 0.0)) {
    throw Error(ErrorCode::kDegenerate, "no excitation away from DC");
  }
  return std::sqrt(num / den);
}

double tau_frequency_domain(const std::vector<std::complex<double>>& input,
                            const std::vector<std::complex<double>>& frf, double ts, long n) {
  std::vector<Eigen::VectorXcd> u;
  std::vector<Eigen::MatrixXcd> g;
  u.reserve(input.size());
  g.reserve(frf.size());
  for (const auto& v : input) u.push_back(Eigen::VectorXcd::Constant(1, v));
  for (const auto& v : frf) g.push_back(Eigen::MatrixXcd::Constant(1, 1, v));
  return tau_frequency_domain(u, g, ts, n);
}

std::vector<std::complex<double>> dft(const Eigen::VectorXd& samples) {
  Eigen::FFT<double> fft;
  std::vector<double> in(samples.data(), samples.data() + samples.size());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  return out;
}

}  // namespace sdnid::sdn
