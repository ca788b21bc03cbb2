#include "bla.hpp"

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "error.hpp"
#include "sdn.hpp"

namespace sdnid::bla {
namespace {

// Markov parameters h_1..h_count of the ARX model; h_j is ny x nu.
std::vector<Eigen::MatrixXd> arx_impulse(const Eigen::MatrixXd& theta, int lag, int nu, int ny,
                                         int count) {
  std::vector<Eigen::MatrixXd> h(static_cast<std::size_t>(count + 1),
                                 Eigen::MatrixXd::Zero(ny, nu));
  // y_k = sum_i A_i y_{k-i} + sum_i B_i u_{k-i}; theta rows follow the
  // regressor layout [y_{k-1} .. y_{k-p}, u_{k-1} .. u_{k-p}].
  for (int in = 0; in < nu; ++in) {
    std::vector<Eigen::VectorXd> y(static_cast<std::size_t>(count + 1), Eigen::VectorXd::Zero(ny));
    for (int k = 1; k <= count; ++k) {
      Eigen::VectorXd phi = Eigen::VectorXd::Zero(lag * (ny + nu));
      for (int i = 1; i <= lag; ++i) {
        if (k - i >= 0) phi.segment((i - 1) * ny, ny) = y[static_cast<std::size_t>(k - i)];
        if (k - i == 0) phi((lag * ny) + (i - 1) * nu + in) = 1.0;
      }
      y[static_cast<std::size_t>(k)] = theta.transpose() * phi;
      h[static_cast<std::size_t>(k)].col(in) = y[static_cast<std::size_t>(k)];
    }
  }
  return h;
}

bool log_defined(const Eigen::MatrixXd& ad) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(ad, false);
  const double scale = std::max(1.0, ad.cwiseAbs().maxCoeff());
  for (const auto& ev : es.eigenvalues()) {
    if (std::abs(ev.imag()) <= 1e-12 * scale && ev.real() <= 1e-12 * scale) return false;
  }
  return true;
}

bool hurwitz(const Eigen::MatrixXd& a) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  for (const auto& ev : es.eigenvalues()) {
    if (!(ev.real() < 0.0)) return false;
  }
  return true;
}

// Integral of exp(A s) ds over [0, ts], from exp([[A, I], [0, 0]] ts).
Eigen::MatrixXd zoh_integral(const Eigen::MatrixXd& a, double ts) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = a * ts;
  m.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n) * ts;
  const Eigen::MatrixXd phi = m.exp();
  return phi.topRightCorner(n, n);
}

LinearSS to_continuous(const DiscreteSS& d) {
  const Eigen::Index n = d.A.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  LinearSS c;
  c.C = d.C;
  c.D = d.D;
  if (log_defined(d.A)) {
    c.A = d.A.log() / d.ts;
    c.B = zoh_integral(c.A, d.ts).colPivHouseholderQr().solve(d.B);
  } else {
    c.tustin_fallback = true;
    c.A = (2.0 / d.ts) * (d.A - eye) * (d.A + eye).inverse();
    c.B = (eye - 0.5 * d.ts * c.A) * d.B / d.ts;
  }
  c.stable = hurwitz(c.A);
  return c;
}

}  // namespace

DiscreteSS zoh_discretize(const LinearSS& model, double ts) {
  if (!(ts > 0.0)) throw Error(ErrorCode::kInvalidArgument, "zoh_discretize: ts must be > 0");
  DiscreteSS d;
  d.ts = ts;
  d.A = (model.A * ts).exp();
  d.B = zoh_integral(model.A, ts) * model.B;
  d.C = model.C;
  d.D = model.D;
  return d;
}

BlaFit fit_bla(const Signal& u, const Signal& y, int order, int lag) {
  if (order < 1) throw Error(ErrorCode::kInvalidArgument, "BLA order must be >= 1");
  if (lag < 1) throw Error(ErrorCode::kInvalidArgument, "ARX lag must be >= 1");
  if (u.length() != y.length()) {
    throw Error(ErrorCode::kInvalidArgument, "input and output lengths differ");
  }
  const int nu = static_cast<int>(u.channels());
  const int ny = static_cast<int>(y.channels());
  const Eigen::Index rows = u.length() - lag;
  const int cols = lag * (ny + nu);
  if (rows < 2 * cols) {
    throw Error(ErrorCode::kData, "too few samples for an ARX fit of lag " + std::to_string(lag));
  }
  if (order > lag * std::min(nu, ny)) {
    throw Error(ErrorCode::kInvalidArgument, "BLA order exceeds the ARX realization rank");
  }

  Eigen::MatrixXd phi(rows, cols);
  Eigen::MatrixXd target(rows, ny);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index k = r + lag;
    for (int i = 1; i <= lag; ++i) {
      phi.block(r, (i - 1) * ny, 1, ny) = y.values().row(k - i);
      phi.block(r, lag * ny + (i - 1) * nu, 1, nu) = u.values().row(k - i);
    }
    target.row(r) = y.values().row(k);
  }

  const Eigen::MatrixXd input_block = phi.rightCols(lag * nu);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> input_qr(input_block);
  if (input_qr.rank() < lag * nu) {
    throw Error(ErrorCode::kRankDeficient,
                "input is not persistently exciting of order " + std::to_string(lag) +
                    " (rank " + std::to_string(input_qr.rank()) + " of " +
                    std::to_string(lag * nu) + ")");
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(phi);
  BlaFit fit;
  fit.arx = cod.solve(target);

  // Hankel of Markov parameters, r block rows by r block columns.
  const int r = std::max(lag, order + 1);
  const std::vector<Eigen::MatrixXd> h = arx_impulse(fit.arx, lag, nu, ny, 2 * r);
  Eigen::MatrixXd hankel(r * ny, r * nu);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      hankel.block(i * ny, j * nu, ny, nu) = h[static_cast<std::size_t>(i + j + 1)];
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(hankel, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sqrt_s = svd.singularValues().head(order).cwiseSqrt();
  const Eigen::MatrixXd obs = svd.matrixU().leftCols(order) * sqrt_s.asDiagonal();
  const Eigen::MatrixXd ctrl = sqrt_s.asDiagonal() * svd.matrixV().leftCols(order).transpose();

  DiscreteSS& d = fit.discrete;
  d.ts = u.ts();
  d.C = obs.topRows(ny);
  d.B = ctrl.leftCols(nu);
  d.D = Eigen::MatrixXd::Zero(ny, nu);
  d.A = obs.topRows((r - 1) * ny).completeOrthogonalDecomposition().solve(obs.bottomRows((r - 1) * ny));

  fit.continuous = to_continuous(d);
  return fit;
}

BlaStates bla_states(const LinearSS& model, const Signal& u, double divergence_limit) {
  if (model.B.cols() != u.channels() || model.A.rows() != model.B.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "bla_states: model and input dimensions differ");
  }
  const DiscreteSS d = zoh_discretize(model, u.ts());
  const Eigen::Index k_total = u.length();
  BlaStates out{Eigen::MatrixXd(k_total, model.order()), Eigen::MatrixXd(k_total, model.order())};
  Eigen::VectorXd x = Eigen::VectorXd::Zero(model.order());
  for (Eigen::Index k = 0; k < k_total; ++k) {
    const Eigen::VectorXd uk = u.values().row(k).transpose();
    if (!x.allFinite() || (x.size() > 0 && x.cwiseAbs().maxCoeff() > divergence_limit)) {
      throw DivergenceError(static_cast<long>(k), 0,
                            "BLA simulation diverged at sample " + std::to_string(k));
    }
    out.x.row(k) = x.transpose();
    out.xdot.row(k) = (model.A * x + model.B * uk).transpose();
    x = d.A * x + d.B * uk;
  }
  return out;
}

TauEstimate estimate_tau(const Signal& u, const Signal& y, int order, int lag) {
  TauEstimate est;
  est.fit = fit_bla(u, y, order, lag);
  const BlaStates s = bla_states(est.fit.continuous, u);
  est.tau = sdn::tau_from_variances(s.x, s.xdot);
  return est;
}

double tau_bla(const Signal& u, const Signal& y, int order, int lag) {
  return estimate_tau(u, y, order, lag).tau;
}

}  // namespace sdnid::bla
