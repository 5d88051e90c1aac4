#include "wadc/wac.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "wadc/polynomial.hpp"

namespace wadc {

StateSpace realize(const ArxCommonDen& model, std::pair<MachineId, MachineId> pair) {
  const int h = model.pair_index(pair.first, pair.second);
  if (h < 0) throw std::out_of_range("realize: no such pair");
  const int k = model.order_k;

  // Loop transfer function B(z) / (z A(z)): the extra z carries the
  // one-sample input delay of the difference equation.
  Eigen::VectorXd num = model.num[static_cast<size_t>(h)];  // length k+1, descending
  Eigen::VectorXd den(k + 2);
  den[0] = 1.0;
  den.segment(1, k) = model.den;
  den[k + 1] = 0.0;

  // Cancel shared trailing roots at z = 0.
  while (num.size() > 1 && den.size() > 1 && num[num.size() - 1] == 0.0 &&
         den[den.size() - 1] == 0.0) {
    num.conservativeResize(num.size() - 1);
    den.conservativeResize(den.size() - 1);
  }

  const int p = static_cast<int>(den.size()) - 1;  // realization order
  StateSpace ss;
  ss.ts = model.ts;
  ss.a.setZero(p, p);
  ss.a.row(0) = -den.tail(p).transpose();
  if (p > 1) ss.a.block(1, 0, p - 1, p - 1).setIdentity();
  ss.b.setZero(p, 1);
  ss.b(0, 0) = 1.0;
  // Strictly proper: numerator degree <= p - 1, left-padded into C.
  ss.c.setZero(1, p);
  const int q = static_cast<int>(num.size()) - 1;  // numerator degree
  for (int i = 0; i <= q; ++i) ss.c(0, p - 1 - q + i) = num[i];
  ss.d.setZero(1, 1);

  // Canonical rescaling x -> ||C|| x: balances the tiny numerator against
  // the unit input column so the Riccati and covariance recursions operate
  // near unit scale. The transfer function is unchanged.
  const double scale = ss.c.norm();
  if (scale > 0.0) {
    ss.c /= scale;
    ss.b *= scale;
  }

  const Eigen::VectorXcd eigs = ss.a.eigenvalues();
  ss.stable = true;
  for (Eigen::Index i = 0; i < eigs.size(); ++i)
    if (std::abs(eigs[i]) >= 1.0) ss.stable = false;
  return ss;
}

LqrSolution dlqr(const StateSpace& ss, double rho, double tol, int max_iter) {
  if (rho <= 0.0) throw std::invalid_argument("dlqr: rho must be > 0");
  const int p = ss.order();
  const int q = static_cast<int>(ss.b.cols());
  const Eigen::MatrixXd qmat = ss.c.transpose() * ss.c;
  const Eigen::MatrixXd rmat = rho * Eigen::MatrixXd::Identity(q, q);

  LqrSolution sol;
  sol.rho = rho;
  Eigen::MatrixXd pmat = Eigen::MatrixXd::Zero(p, p);
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::MatrixXd btp = ss.b.transpose() * pmat;
    const Eigen::MatrixXd denom = rmat + btp * ss.b;
    const Eigen::MatrixXd gain = denom.ldlt().solve(btp * ss.a);
    Eigen::MatrixXd next =
        qmat + ss.a.transpose() * pmat * ss.a - ss.a.transpose() * pmat * ss.b * gain;
    next = 0.5 * (next + next.transpose());
    const double delta = (next - pmat).cwiseAbs().maxCoeff();
    pmat = next;
    sol.horizon_used = it;
    if (delta <= tol) {
      sol.converged = true;
      break;
    }
  }
  sol.riccati = pmat;
  const Eigen::MatrixXd btp = ss.b.transpose() * pmat;
  sol.gain = (rmat + btp * ss.b).ldlt().solve(btp * ss.a);
  return sol;
}

KalmanState kalman_init(const StateSpace& ss, double q_noise, double r_noise) {
  const int p = ss.order();
  KalmanState kf;
  kf.x_hat = Eigen::VectorXd::Zero(p);
  kf.cov = Eigen::MatrixXd::Identity(p, p);
  kf.gain = Eigen::VectorXd::Zero(p);
  kf.q_noise = q_noise * Eigen::MatrixXd::Identity(p, p);
  kf.r_noise = r_noise;
  kf.h = ss.c.row(0);
  return kf;
}

void kalman_predict(KalmanState& kf, const StateSpace& ss, double u) {
  if (!std::isfinite(u)) throw std::invalid_argument("kalman_predict: non-finite input");
  kf.x_hat = ss.a * kf.x_hat + ss.b.col(0) * u;
  Eigen::MatrixXd cov = ss.a * kf.cov * ss.a.transpose() + kf.q_noise;
  kf.cov = 0.5 * (cov + cov.transpose());
}

void kalman_gain(KalmanState& kf) {
  const double innovation = (kf.h * kf.cov * kf.h.transpose())(0, 0) + kf.r_noise;
  if (!(innovation > 0.0))
    throw std::runtime_error("kalman_gain: singular innovation covariance");
  kf.gain = kf.cov * kf.h.transpose() / innovation;
}

void kalman_correct(KalmanState& kf, double z) {
  const double innovation = z - (kf.h * kf.x_hat)(0);
  kf.x_hat += kf.gain * innovation;
  Eigen::MatrixXd cov = kf.cov - kf.gain * (kf.h * kf.cov);
  kf.cov = 0.5 * (cov + cov.transpose());
}

double controller_step(WacController& c, double z) {
  kalman_predict(c.kf, c.ss, c.u_prev);
  kalman_gain(c.kf);
  kalman_correct(c.kf, z);
  double u = -(c.lqr.gain * c.kf.x_hat)(0);
  u = std::clamp(u, -c.u_limit, c.u_limit);
  c.u_prev = u;
  return u;
}

WacController synthesize(const ArxCommonDen& reduced_model, const SelectedLoop& loop,
                         const SynthesisOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  WacController c;
  c.loop = loop;
  c.ss = realize(reduced_model, {loop.output, loop.input});
  c.lqr = dlqr(c.ss, opts.rho, opts.riccati_tol, opts.riccati_max_iter);
  c.kf = kalman_init(c.ss, opts.q_noise, opts.r_noise);
  c.u_limit = opts.u_limit;
  const auto t1 = std::chrono::steady_clock::now();
  c.elapsed = std::chrono::duration<double>(t1 - t0).count();
  return c;
}

}  // namespace wadc
