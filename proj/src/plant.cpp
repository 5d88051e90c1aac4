#include "wadc/plant.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wadc {

namespace {

std::vector<PlantMode> oscillatory_modes(const Eigen::VectorXcd& eigs) {
  std::vector<PlantMode> modes;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const Cplx s = eigs[i];
    if (s.imag() <= 1e-9) continue;  // one representative per conjugate pair
    PlantMode m;
    m.eigenvalue = s;
    m.hz = s.imag() / (2.0 * M_PI);
    m.zeta = -s.real() / std::abs(s);
    modes.push_back(m);
  }
  std::sort(modes.begin(), modes.end(),
            [](const PlantMode& a, const PlantMode& b) { return a.hz < b.hz; });
  return modes;
}

std::vector<PlantMode> modes_from_discrete(const Eigen::VectorXcd& eigs, double ts) {
  Eigen::VectorXcd s(eigs.size());
  int n = 0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    if (std::abs(eigs[i]) < 1e-12) continue;  // deadbeat directions have no s image
    s[n++] = std::log(eigs[i]) / ts;
  }
  return oscillatory_modes(s.head(n));
}

PlantMode least_damped_in_band(const std::vector<PlantMode>& modes, double lo, double hi) {
  PlantMode best;
  double best_zeta = std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& m : modes) {
    if (m.hz < lo || m.hz > hi) continue;
    if (m.zeta < best_zeta) {
      best_zeta = m.zeta;
      best = m;
      found = true;
    }
  }
  if (!found)
    throw std::runtime_error("closed_loop_eigen: no oscillatory mode in 0.1-0.8 Hz band");
  return best;
}

/// Steady-state Kalman gain by iterating the covariance recursion.
Eigen::VectorXd steady_state_gain(const WacController& c) {
  const Eigen::MatrixXd& a = c.ss.a;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::VectorXd gain = Eigen::VectorXd::Zero(a.rows());
  for (int it = 0; it < 100000; ++it) {
    const Eigen::MatrixXd prior = a * cov * a.transpose() + c.kf.q_noise;
    const double innov = (c.kf.h * prior * c.kf.h.transpose())(0, 0) + c.kf.r_noise;
    gain = prior * c.kf.h.transpose() / innov;
    Eigen::MatrixXd next = prior - gain * (c.kf.h * prior);
    next = 0.5 * (next + next.transpose());
    if ((next - cov).cwiseAbs().maxCoeff() <= 1e-13) {
      cov = next;
      break;
    }
    cov = next;
  }
  return gain;
}

/// Maps a controller's machine ids onto plant rows/channels. Control
/// channels are machine-aligned in the built configs (identity actuator).
int machine_row(const PlantModel& model, MachineId id) {
  if (id < 1 || id > model.machines())
    throw std::out_of_range("plant: machine id outside configuration");
  return id - 1;
}

}  // namespace

Eigen::VectorXd SimulationResult::relative_speed(MachineId i, MachineId j) const {
  return window.samples.col(i - 1) - window.samples.col(j - 1);
}

PlantModel build_plant(const PlantConfig& config) {
  const int m = static_cast<int>(config.inertia_h.size());
  if (m < 1) throw std::invalid_argument("build_plant: no machines");
  if (config.damping_d.size() != m || config.stiffness.rows() != m ||
      config.stiffness.cols() != m || config.actuator.rows() != m ||
      config.disturbance.rows() != m)
    throw std::invalid_argument("build_plant: dimension mismatch");
  if ((config.inertia_h.array() <= 0.0).any())
    throw std::invalid_argument("build_plant: inertia must be positive");
  if (!config.stiffness.isApprox(config.stiffness.transpose(), 1e-9))
    throw std::invalid_argument("build_plant: stiffness must be symmetric");
  if (config.stiffness.rowwise().sum().cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("build_plant: stiffness rows must sum to zero");

  const int q = static_cast<int>(config.actuator.cols());
  const int r = static_cast<int>(config.disturbance.cols());
  const int n = 2 * m + q;
  const double omega_b = 2.0 * M_PI * config.base_freq;
  const Eigen::VectorXd minv = (2.0 * config.inertia_h.array()).inverse();

  PlantModel model;
  model.config = config;
  model.a_cont.setZero(n, n);
  model.a_cont.block(0, m, m, m) = omega_b * Eigen::MatrixXd::Identity(m, m);
  model.a_cont.block(m, 0, m, m) = -(minv.asDiagonal() * config.stiffness);
  model.a_cont.block(m, m, m, m) =
      Eigen::MatrixXd((-minv.cwiseProduct(config.damping_d)).asDiagonal());
  if (q > 0) {
    model.a_cont.block(m, 2 * m, m, q) = minv.asDiagonal() * config.actuator;
    model.a_cont.block(2 * m, 2 * m, q, q) =
        -Eigen::MatrixXd::Identity(q, q) / config.actuator_lag;
  }
  model.b_cont.setZero(n, q);
  if (q > 0)
    model.b_cont.block(2 * m, 0, q, q) = Eigen::MatrixXd::Identity(q, q) / config.actuator_lag;
  model.b_dist.setZero(n, r);
  model.b_dist.block(m, 0, m, r) = minv.asDiagonal() * config.disturbance;
  model.c_out.setZero(m, n);
  model.c_out.block(0, m, m, m).setIdentity();

  const Eigen::VectorXcd eigs = model.a_cont.eigenvalues();
  model.modes = oscillatory_modes(eigs);
  model.stable = true;
  for (Eigen::Index i = 0; i < eigs.size(); ++i)
    if (eigs[i].real() > 1e-9) model.stable = false;
  return model;
}

PlantModel build_two_area(const TwoAreaOverrides& overrides) {
  const int m = 4;
  PlantConfig cfg;
  cfg.inertia_h = overrides.inertia.size() == m ? overrides.inertia
                                                : (Eigen::VectorXd(m) << 6.5, 6.5, 6.2, 6.2).finished();
  cfg.damping_d =
      overrides.damping.size() == m ? overrides.damping : Eigen::VectorXd::Ones(m);
  std::vector<double> intra = overrides.intra_stiffness;
  if (intra.empty()) intra = {0.631, 0.631};
  std::vector<double> tie = overrides.tie_stiffness;
  if (tie.empty()) tie = {0.1196, 0.1196, 0.1196, 0.1196};
  if (intra.size() != 2 || tie.size() != 4)
    throw std::invalid_argument("build_two_area: need 2 intra and 4 tie stiffness entries");
  cfg.stiffness.setZero(m, m);
  auto edge = [&](int i, int j, double k) {  // 1-based machine ids
    cfg.stiffness(i - 1, i - 1) += k;
    cfg.stiffness(j - 1, j - 1) += k;
    cfg.stiffness(i - 1, j - 1) -= k;
    cfg.stiffness(j - 1, i - 1) -= k;
  };
  edge(1, 2, intra[0]);
  edge(3, 4, intra[1]);
  edge(1, 3, tie[0]);
  edge(1, 4, tie[1]);
  edge(2, 3, tie[2]);
  edge(2, 4, tie[3]);
  cfg.actuator = Eigen::MatrixXd::Identity(m, m);
  cfg.disturbance = Eigen::MatrixXd::Identity(m, m);
  cfg.actuator_lag = overrides.actuator_lag;
  return build_plant(cfg);
}

PlantModel build_ten_machine() {
  const int m = 10;
  PlantConfig cfg;
  cfg.inertia_h =
      (Eigen::VectorXd(m) << 5.0, 4.2, 4.8, 6.5, 6.0, 5.5, 5.8, 4.5, 6.2, 42.0).finished();
  cfg.damping_d = Eigen::VectorXd::Ones(m);
  cfg.stiffness.setZero(m, m);
  auto edge = [&](int i, int j, double k) {  // 1-based machine ids
    cfg.stiffness(i - 1, i - 1) += k;
    cfg.stiffness(j - 1, j - 1) += k;
    cfg.stiffness(i - 1, j - 1) -= k;
    cfg.stiffness(j - 1, i - 1) -= k;
  };
  // Block {4,5,6,7,9} as a stiff clique, blocks {1,8} and {2,3} as stiff
  // pairs, machine 10 alone; weak ties hold the blocks together. Intra
  // coupling ~25x the ties so each block swings nearly rigidly.
  const int ring[] = {4, 5, 6, 7, 9};
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) edge(ring[i], ring[j], 2.0);
  edge(1, 8, 2.0);
  edge(2, 3, 2.0);
  edge(8, 4, 0.08);
  edge(3, 5, 0.08);
  edge(10, 6, 0.15);
  edge(1, 2, 0.06);
  cfg.actuator = Eigen::MatrixXd::Identity(m, m);
  cfg.disturbance = Eigen::MatrixXd::Identity(m, m);
  return build_plant(cfg);
}

DiscretePlant discretize_zoh(const PlantModel& model, double ts) {
  if (ts <= 0.0) throw std::invalid_argument("discretize_zoh: ts must be > 0");
  const int n = model.states();
  const int q = static_cast<int>(model.b_cont.cols());
  const int r = static_cast<int>(model.b_dist.cols());
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + q + r, n + q + r);
  aug.topLeftCorner(n, n) = model.a_cont;
  aug.block(0, n, n, q) = model.b_cont;
  aug.block(0, n + q, n, r) = model.b_dist;
  const Eigen::MatrixXd e = (aug * ts).exp();

  DiscretePlant d;
  d.ad = e.topLeftCorner(n, n);
  d.bd_ctrl = e.block(0, n, n, q);
  d.bd_dist = e.block(0, n + q, n, r);
  d.c_out = model.c_out;
  d.ts = ts;
  return d;
}

namespace {

/// Per-step exogenous torque from pulses and wind channels.
class DisturbanceDriver {
 public:
  DisturbanceDriver(const SimulationOptions& opts, int channels, double ts)
      : opts_(opts), ts_(ts), u_(channels) {
    for (const auto& w : opts.wind) {
      wind_states_.push_back(0.0);
      wind_rngs_.emplace_back(w.seed);
      wind_alphas_.push_back(std::exp(-2.0 * M_PI * w.bandwidth_hz * ts));
    }
  }

  const Eigen::VectorXd& at(int step) {
    const double t = step * ts_;
    u_.setZero();
    for (const auto& p : opts_.pulses)
      if (t >= p.start && t < p.start + p.duration) u_[p.channel] += p.amplitude;
    for (size_t w = 0; w < opts_.wind.size(); ++w) {
      const double alpha = wind_alphas_[w];
      wind_states_[w] = alpha * wind_states_[w] +
                        opts_.wind[w].amplitude * std::sqrt(1.0 - alpha * alpha) *
                            wind_rngs_[w].gaussian();
      u_[opts_.wind[w].channel] += wind_states_[w];
    }
    return u_;
  }

 private:
  const SimulationOptions& opts_;
  double ts_;
  Eigen::VectorXd u_;
  std::vector<double> wind_states_;
  std::vector<Rng> wind_rngs_;
  std::vector<double> wind_alphas_;
};

double probe_value(const std::vector<ProbeSignal>& probes, MachineId id, int step) {
  for (const auto& p : probes)
    if (p.machine == id) return (step < p.values.size()) ? p.values[step] : 0.0;
  return 0.0;
}

}  // namespace

SimulationResult simulate(const PlantModel& model, double ts, double duration,
                          const SimulationOptions& opts) {
  if (duration <= 0.0) throw std::invalid_argument("simulate: duration must be > 0");
  const DiscretePlant disc = discretize_zoh(model, ts);
  const int steps = static_cast<int>(std::lround(duration / ts));
  const int m = model.machines();
  const int q = static_cast<int>(disc.bd_ctrl.cols());
  const int r = static_cast<int>(disc.bd_dist.cols());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(model.states());
  if (opts.x0.size() > 0) {
    if (opts.x0.size() != model.states())
      throw std::invalid_argument("simulate: x0 dimension mismatch");
    x = opts.x0;
  }

  DisturbanceDriver driver(opts, r, ts);
  Rng noise_rng(opts.noise_seed);

  SimulationResult res;
  res.window.ts = ts;
  res.window.start_time = 0.0;
  res.window.samples.resize(steps, m);
  res.states.resize(steps, model.states());
  for (int step = 0; step < steps; ++step) {
    res.states.row(step) = x.transpose();
    Eigen::VectorXd y = disc.c_out * x;
    if (opts.noise_std > 0.0)
      for (int c = 0; c < m; ++c) y[c] += opts.noise_std * noise_rng.gaussian();
    res.window.samples.row(step) = y.transpose();

    Eigen::VectorXd u_ctrl = Eigen::VectorXd::Zero(q);
    for (int ch = 0; ch < q; ++ch) u_ctrl[ch] = probe_value(opts.probes, ch + 1, step);
    x = disc.ad * x + disc.bd_ctrl * u_ctrl + disc.bd_dist * driver.at(step);
  }
  res.inputs = opts.probes;
  for (const auto& p : opts.pulses) {
    DisturbanceEvent ev;
    ev.time = p.start;
    ev.magnitude = p.amplitude;
    ev.kind = p.kind;
    res.events.push_back(ev);
  }
  return res;
}

DampingReport closed_loop_eigen(const PlantModel& model,
                                const std::vector<WacController>& controllers, double ts) {
  const DiscretePlant disc = discretize_zoh(model, ts);
  const int n = model.states();
  int total = n;
  for (const auto& c : controllers) total += c.ss.order();

  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(total, total);
  aug.topLeftCorner(n, n) = disc.ad;
  int at = n;
  for (const auto& c : controllers) {
    const int p = c.ss.order();
    const int out_row = machine_row(model, c.loop.output);
    const int in_ch = machine_row(model, c.loop.input);
    const Eigen::VectorXd g = steady_state_gain(c);
    const Eigen::MatrixXd est =
        (Eigen::MatrixXd::Identity(p, p) - g * c.kf.h) *
        (c.ss.a - c.ss.b.col(0) * c.lqr.gain);
    const Eigen::RowVectorXd c_meas = disc.c_out.row(out_row);
    const double kg = (c.lqr.gain * g)(0);

    aug.topLeftCorner(n, n) -= disc.bd_ctrl.col(in_ch) * (kg * c_meas);
    aug.block(0, at, n, p) = -disc.bd_ctrl.col(in_ch) * (c.lqr.gain * est);
    aug.block(at, 0, p, n) = g * c_meas;
    aug.block(at, at, p, p) = est;
    at += p;
  }

  DampingReport rep;
  rep.open_modes = modes_from_discrete(disc.ad.eigenvalues(), ts);
  rep.closed_modes = modes_from_discrete(aug.eigenvalues(), ts);
  rep.open_inter_area = least_damped_in_band(rep.open_modes, 0.1, 0.8);
  rep.closed_inter_area = least_damped_in_band(rep.closed_modes, 0.1, 0.8);
  return rep;
}

ClosedLoopResult simulate_closed_loop(const PlantModel& model,
                                      std::vector<WacController>& controllers, double ts,
                                      double duration, const SimulationOptions& opts) {
  if (duration <= 0.0) throw std::invalid_argument("simulate: duration must be > 0");
  const DiscretePlant disc = discretize_zoh(model, ts);
  const int steps = static_cast<int>(std::lround(duration / ts));
  const int m = model.machines();
  const int q = static_cast<int>(disc.bd_ctrl.cols());
  const int r = static_cast<int>(disc.bd_dist.cols());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(model.states());
  if (opts.x0.size() > 0) {
    if (opts.x0.size() != model.states())
      throw std::invalid_argument("simulate: x0 dimension mismatch");
    x = opts.x0;
  }
  DisturbanceDriver driver(opts, r, ts);
  Rng noise_rng(opts.noise_seed);

  ClosedLoopResult res;
  res.sim.window.ts = ts;
  res.sim.window.start_time = 0.0;
  res.sim.window.samples.resize(steps, m);
  res.sim.states.resize(steps, model.states());
  res.controls.resize(steps, static_cast<int>(controllers.size()));

  for (int step = 0; step < steps; ++step) {
    res.sim.states.row(step) = x.transpose();
    Eigen::VectorXd y = disc.c_out * x;
    if (opts.noise_std > 0.0)
      for (int c = 0; c < m; ++c) y[c] += opts.noise_std * noise_rng.gaussian();
    res.sim.window.samples.row(step) = y.transpose();

    Eigen::VectorXd u_ctrl = Eigen::VectorXd::Zero(q);
    for (int ch = 0; ch < q; ++ch) u_ctrl[ch] = probe_value(opts.probes, ch + 1, step);
    for (size_t ci = 0; ci < controllers.size(); ++ci) {
      WacController& c = controllers[ci];
      const double z = y[machine_row(model, c.loop.output)];
      const double u = controller_step(c, z);
      u_ctrl[machine_row(model, c.loop.input)] += u;
      res.controls(step, static_cast<int>(ci)) = u;
    }
    x = disc.ad * x + disc.bd_ctrl * u_ctrl + disc.bd_dist * driver.at(step);
  }
  res.sim.inputs = opts.probes;
  for (const auto& p : opts.pulses) {
    DisturbanceEvent ev;
    ev.time = p.start;
    ev.magnitude = p.amplitude;
    ev.kind = p.kind;
    res.sim.events.push_back(ev);
  }
  return res;
}

double settling_time(const Eigen::VectorXd& signal, double ts, double frac) {
  const double peak = signal.cwiseAbs().maxCoeff();
  if (peak <= 0.0) return 0.0;
  const double band = frac * peak;
  int last = -1;
  for (Eigen::Index i = 0; i < signal.size(); ++i)
    if (std::abs(signal[i]) > band) last = static_cast<int>(i);
  return (last + 1) * ts;
}

}  // namespace wadc
