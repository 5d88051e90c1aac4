#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "wadc/measurements.hpp"
#include "wadc/wac.hpp"

namespace wadc {

/// Linearized multi-machine swing-dynamics configuration. States are rotor
/// angles (rad), speed deviations (pu) and one first-order actuator lag per
/// control channel feeding supplementary torque.
struct PlantConfig {
  Eigen::VectorXd inertia_h;    // per machine, seconds
  Eigen::VectorXd damping_d;    // pu torque per pu speed
  Eigen::MatrixXd stiffness;    // m x m synchronizing torque (symmetric, zero row sums)
  Eigen::MatrixXd actuator;     // m x q: control channels to torque
  Eigen::MatrixXd disturbance;  // m x r: exogenous injections to torque
  double base_freq = 60.0;      // Hz
  double actuator_lag = 0.05;   // s
};

struct PlantMode {
  double hz = 0.0;
  double zeta = 0.0;
  Cplx eigenvalue;
};

struct PlantModel {
  PlantConfig config;
  Eigen::MatrixXd a_cont;  // (2m+q) x (2m+q)
  Eigen::MatrixXd b_cont;  // control input matrix, (2m+q) x q
  Eigen::MatrixXd b_dist;  // disturbance input matrix, (2m+q) x r
  Eigen::MatrixXd c_out;   // selects speed-deviation rows, m x (2m+q)
  std::vector<PlantMode> modes;  // oscillatory modes, ascending frequency
  bool stable = true;            // no eigenvalue with positive real part

  int machines() const { return static_cast<int>(config.inertia_h.size()); }
  int states() const { return static_cast<int>(a_cont.rows()); }
};

/// Exact zero-order-hold discretization of the plant.
struct DiscretePlant {
  Eigen::MatrixXd ad;
  Eigen::MatrixXd bd_ctrl;
  Eigen::MatrixXd bd_dist;
  Eigen::MatrixXd c_out;
  double ts = 0.01;
};

struct PulseSpec {
  int channel = 0;      // disturbance channel index
  double start = 1.0;   // s
  double duration = 0.1;  // s; very large = step
  double amplitude = 1.0;  // pu torque
  std::string kind = "fault";
};

/// Band-limited random power injection (first-order filtered white noise).
struct WindSpec {
  int channel = 0;
  double amplitude = 0.01;    // stationary standard deviation, pu
  double bandwidth_hz = 0.5;  // corner frequency of the shaping filter
  std::uint64_t seed = 1;
};

struct SimulationOptions {
  std::vector<PulseSpec> pulses;
  std::vector<WindSpec> wind;
  std::vector<ProbeSignal> probes;  // control-channel injections by machine id
  double noise_std = 0.0;           // measurement noise on speed deviations
  std::uint64_t noise_seed = 0;
  Eigen::VectorXd x0;               // empty = rest
};

struct SimulationResult {
  MeasurementWindow window;
  std::vector<ProbeSignal> inputs;
  std::vector<DisturbanceEvent> events;
  Eigen::MatrixXd states;  // full state trajectory, one row per sample

  /// Speed of machine i relative to machine j (1-based ids).
  Eigen::VectorXd relative_speed(MachineId i, MachineId j) const;
};

struct TwoAreaOverrides {
  std::vector<double> intra_stiffness;  // edges 1-2 and 3-4; default {0.631, 0.631}
  std::vector<double> tie_stiffness;    // edges 1-3, 1-4, 2-3, 2-4; default 0.1196 each
  Eigen::VectorXd inertia;              // default (6.5, 6.5, 6.2, 6.2)
  Eigen::VectorXd damping;              // default all 1.0
  double actuator_lag = 0.05;
};

/// Four machines in two stiff pairs joined by a weak aggregate tie (spread
/// over the four cross-area edges so machines within an area stay motion-
/// identical under symmetric forcing), giving a single inter-area mode near
/// 0.6 Hz and local modes near 1.05 Hz.
PlantModel build_two_area(const TwoAreaOverrides& overrides = {});

/// Ten machines wired as four strongly coupled blocks {4,5,6,7,9}, {1,8},
/// {2,3}, {10} with weak ties between blocks; machine 10 carries high
/// inertia.
PlantModel build_ten_machine();

/// General constructor from a config (validates shape and row sums).
PlantModel build_plant(const PlantConfig& config);

DiscretePlant discretize_zoh(const PlantModel& model, double ts);

SimulationResult simulate(const PlantModel& model, double ts, double duration,
                          const SimulationOptions& opts = {});

struct DampingReport {
  std::vector<PlantMode> open_modes;
  std::vector<PlantMode> closed_modes;
  /// Least-damped oscillatory mode inside [0.1, 0.8] Hz, open vs closed.
  PlantMode open_inter_area;
  PlantMode closed_inter_area;
};

/// Eigenanalysis of the plant with the controllers' estimator and feedback
/// dynamics appended (saturation ignored, steady-state Kalman gain).
DampingReport closed_loop_eigen(const PlantModel& model,
                                const std::vector<WacController>& controllers, double ts);

/// Time-domain closed loop with the real controller stepping (saturation
/// active). Controllers are advanced in place; their control traces are
/// returned alongside the measurements.
struct ClosedLoopResult {
  SimulationResult sim;
  Eigen::MatrixXd controls;  // one column per controller
};

ClosedLoopResult simulate_closed_loop(const PlantModel& model,
                                      std::vector<WacController>& controllers, double ts,
                                      double duration, const SimulationOptions& opts = {});

/// Time after which |x| stays within frac * max|x|; used for ringdown
/// comparisons.
double settling_time(const Eigen::VectorXd& signal, double ts, double frac = 0.05);

}  // namespace wadc
