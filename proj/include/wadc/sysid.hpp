#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "wadc/measurements.hpp"

namespace wadc {

/// MIMO ARX model in which every input-output pair shares one denominator:
///   y_m(t) = sum_p sum_{i=0..k} b_i^{mp} u_p(t-1-i) - sum_{i=1..k} a_i y_m(t-i)
/// i.e. all transfer functions are (b0 + b1 z^-1 + ... + bk z^-k) z^-1 over
/// (1 + a1 z^-1 + ... + ak z^-k), strictly proper with one sample of input
/// delay (an actuator cannot move rotor speed within the same sample).
struct ArxCommonDen {
  int order_k = 0;
  Eigen::VectorXd den;  // a1..ak, shared
  std::vector<std::pair<MachineId, MachineId>> pairs;  // (output m, input p), output-major
  std::vector<Eigen::VectorXd> num;                    // per pair, b0..bk
  double ts = 0.01;
  double fit = 0.0;  // stacked-residual 2-norm of the best iterate
  int iterations = 0;
  bool converged = false;
  bool stable = false;  // all denominator roots strictly inside the unit circle

  int pair_index(MachineId output, MachineId input) const;  // -1 if absent
  const Eigen::VectorXd& numerator(MachineId output, MachineId input) const;
};

/// Lag matrices for one probing experiment. Each pair (m, p) uses the
/// output-m target/history blocks with the input-p lag matrix, so per-pair
/// matrices are (x_his[m], x_num_basis[p], x_den_basis[m]); they are stored
/// deduplicated because the output blocks repeat across inputs.
struct RegressorSet {
  std::vector<MachineId> outputs;            // window columns, ascending ids
  std::vector<MachineId> inputs;             // probed machines, ascending ids
  std::vector<Eigen::VectorXd> x_his;        // per output: N targets, newest first
  std::vector<Eigen::MatrixXd> x_den_basis;  // per output: N x k output lags
  std::vector<Eigen::MatrixXd> x_num_basis;  // per input: N x (k+1) input lags
  int window_n = 0;  // N
  int order_k = 0;
  int sample_j = 0;  // 0-based index of the newest sample used
  double ts = 0.01;
};

/// One probing run: response window plus the injected inputs (machines not
/// probed are treated as held at zero).
struct Experiment {
  MeasurementWindow outputs;
  std::vector<ProbeSignal> inputs;
};

/// Fills the lag matrices over the most recent N targets. Row r targets
/// y(j-r); its output lags are y(j-r-1)..y(j-r-k) and its input lags
/// u(j-r-1)..u(j-r-1-k). Requires window length >= N + order_k + 1.
RegressorSet build_regressors(const MeasurementWindow& outputs,
                              const std::vector<ProbeSignal>& inputs, int order_k, int N);

/// Least-squares denominator refresh with numerators frozen: solves the
/// stacked system X_den a = X_num b - X_his across all outputs.
Eigen::VectorXd solve_denominator(const RegressorSet& r,
                                  const std::vector<Eigen::VectorXd>& current_num);

/// Least-squares numerator refresh with the denominator frozen; all inputs of
/// one output are solved jointly. Returns coefficients in pair order.
std::vector<Eigen::VectorXd> solve_numerators(const RegressorSet& r,
                                              const Eigen::VectorXd& den);

struct IdentifyOptions {
  double tol = 1e-4;  // stacked-residual 2-norm target
  int max_iter = 100;
  /// Optional warm start, aligned with the output-major pair order; empty
  /// uses the default start (all zero except b0 = 1e-3).
  std::vector<Eigen::VectorXd> init_num;
};

/// Alternating least squares: denominator refresh, numerator refresh,
/// residual check, until tol or max_iter. The returned coefficients are the
/// best iterate by residual, not necessarily the last.
ArxCommonDen identify(const std::vector<Experiment>& experiments, int order_k, int N,
                      const IdentifyOptions& opts = {});

/// Single-experiment convenience overload.
ArxCommonDen identify(const MeasurementWindow& outputs,
                      const std::vector<ProbeSignal>& inputs, int order_k, int N,
                      const IdentifyOptions& opts = {});

/// Simulates the model's difference equation from rest for given inputs;
/// used as the reconstruction oracle and by round-trip tests.
Eigen::MatrixXd simulate_arx(const ArxCommonDen& model,
                             const std::vector<ProbeSignal>& inputs, int n_samples);

}  // namespace wadc
