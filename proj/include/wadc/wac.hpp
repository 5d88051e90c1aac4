#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wadc/modal.hpp"
#include "wadc/sysid.hpp"

namespace wadc {

/// Discrete state space x' = A x + B u, y = C x + D u. SISO controller loops
/// use b of width 1 and c of height 1; the plant module reuses the same type
/// with wider B and C.
struct StateSpace {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
  Eigen::MatrixXd d;
  double ts = 0.01;
  bool stable = true;  // spectral radius of a < 1

  int order() const { return static_cast<int>(a.rows()); }
};

struct LqrSolution {
  Eigen::RowVectorXd gain;  // K, 1 x p
  Eigen::MatrixXd riccati;  // P, p x p
  double rho = 1.0;
  int horizon_used = 0;
  bool converged = false;
};

struct KalmanState {
  Eigen::VectorXd x_hat;    // state estimate
  Eigen::MatrixXd cov;      // estimate covariance L
  Eigen::VectorXd gain;     // Kalman gain G, p x 1 (scalar measurement)
  Eigen::MatrixXd q_noise;  // process-noise covariance
  double r_noise = 1e-3;    // measurement-noise variance
  Eigen::RowVectorXd h;     // observation row, defaults to C
};

struct WacController {
  SelectedLoop loop;
  StateSpace ss;
  LqrSolution lqr;
  KalmanState kf;
  double u_limit = 0.05;  // pu saturation bound
  double elapsed = 0.0;   // synthesis wall time (s)
  double u_prev = 0.0;    // last emitted control, fed to the next predict
};

/// Controllable canonical form of the pair's loop transfer function
/// z^-1 B(z)/A(z); a shared trailing z cancels when the numerator's constant
/// coefficient is zero. D is always 0 (strictly proper).
StateSpace realize(const ArxCommonDen& model, std::pair<MachineId, MachineId> pair);

/// Infinite-horizon discrete LQR with Q = C'C and R = rho I, by backward
/// Riccati iteration from P = 0 until the update stalls below tol.
LqrSolution dlqr(const StateSpace& ss, double rho, double tol = 1e-9,
                 int max_iter = 10000);

KalmanState kalman_init(const StateSpace& ss, double q_noise = 1e-5,
                        double r_noise = 1e-3);

/// x_bar = A x_hat + B u; L_bar = A L A' + Q.
void kalman_predict(KalmanState& kf, const StateSpace& ss, double u);

/// G = L_bar H' / (H L_bar H' + R).
void kalman_gain(KalmanState& kf);

/// x_hat = x_bar + G (z - H x_bar); L = L_bar - G H L_bar. Never increases
/// the covariance trace.
void kalman_correct(KalmanState& kf, double z);

/// One controller tick: predict with the previous control, gain, correct
/// with the new measurement, then u = clamp(-K x_hat, +/- u_limit).
double controller_step(WacController& c, double z);

struct SynthesisOptions {
  double rho = 1.0;
  double u_limit = 0.05;
  double q_noise = 1e-5;
  double r_noise = 1e-3;
  double riccati_tol = 1e-9;
  int riccati_max_iter = 10000;
};

/// realize + dlqr + kalman_init for one selected loop.
WacController synthesize(const ArxCommonDen& reduced_model, const SelectedLoop& loop,
                         const SynthesisOptions& opts = {});

}  // namespace wadc
