#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "wadc/coherency.hpp"
#include "wadc/plant.hpp"
#include "test_util.hpp"

using namespace wadc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

PlantConfig scalar_decay_config() {
  // single machine, no coupling; exercised through the general constructor
  PlantConfig cfg;
  cfg.inertia_h = VectorXd::Constant(1, 5.0);
  cfg.damping_d = VectorXd::Constant(1, 1.0);
  cfg.stiffness = MatrixXd::Zero(1, 1);
  cfg.actuator = MatrixXd::Identity(1, 1);
  cfg.disturbance = MatrixXd::Identity(1, 1);
  return cfg;
}

}  // namespace

TEST_CASE("two-area eigenstructure sits in the designed bands") {
  const PlantModel p = build_two_area();
  CHECK(p.stable);
  int in_band = 0;
  double inter_hz = 0.0, inter_zeta = 0.0;
  for (const auto& m : p.modes) {
    if (m.hz >= 0.1 && m.hz <= 0.8) {
      ++in_band;
      inter_hz = m.hz;
      inter_zeta = m.zeta;
    } else {
      CHECK(m.hz > 0.95);
      CHECK(m.hz < 1.25);
    }
  }
  CHECK(in_band == 1);  // exactly one inter-area mode in the band
  CHECK(inter_hz > 0.55);
  CHECK(inter_hz < 0.65);
  CHECK(inter_zeta < 0.05);
  CHECK(inter_zeta > 0.0);
}

TEST_CASE("config validation rejects broken stiffness") {
  PlantConfig cfg = scalar_decay_config();
  cfg.inertia_h[0] = -1.0;
  CHECK_THROWS(build_plant(cfg));
  cfg = scalar_decay_config();
  cfg.stiffness = MatrixXd::Constant(1, 1, 0.3);  // nonzero row sum
  CHECK_THROWS(build_plant(cfg));
}

TEST_CASE("zero coupling decouples the machines") {
  TwoAreaOverrides ov;
  ov.intra_stiffness = {0.0, 0.0};
  ov.tie_stiffness = {0.0, 0.0, 0.0, 0.0};
  const PlantModel p = build_two_area(ov);
  CHECK(p.config.stiffness.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.modes.empty());  // pure damping, no synchronizing torque, no swing modes
}

TEST_CASE("scaled-up tie raises the inter-area frequency, grouping fixed") {
  const PlantModel base = build_two_area();
  TwoAreaOverrides ov;
  ov.tie_stiffness = {11.96, 11.96, 11.96, 11.96};  // 100x default
  const PlantModel stiff = build_two_area(ov);
  const double base_min = base.modes.front().hz;
  const double stiff_min = stiff.modes.front().hz;
  CHECK(stiff_min > base_min);

  // symmetric pulse on both machines of area 2 rings the areas against each
  // other without exciting intra-area motion
  SimulationOptions opts;
  opts.pulses.push_back({2, 1.0, 0.1, 0.5, "fault"});
  opts.pulses.push_back({3, 1.0, 0.1, 0.5, "fault"});
  const SimulationResult sim = simulate(stiff, 0.01, 8.0, opts);
  MeasurementWindow win;
  win.ts = 0.01;
  win.start_time = 1.2;
  win.samples = sim.window.samples.middleRows(120, 500);
  const CoherencyGrouping g = group_machines(win, 2, {});
  CHECK(g.groups().at(1) == std::vector<MachineId>{1, 2});
  CHECK(g.groups().at(2) == std::vector<MachineId>{3, 4});
}

TEST_CASE("zoh discretization is the exponential map") {
  const PlantModel scalar = build_plant(scalar_decay_config());
  // speed row: dw/dt = -(D/2H) w = -0.1 w; angle adds the integrator
  const DiscretePlant d = discretize_zoh(scalar, 0.1);
  // eigenvalues of Ad are exp(ts * eig(Ac))
  const Eigen::VectorXcd ec = scalar.a_cont.eigenvalues();
  const Eigen::VectorXcd ed = d.ad.eigenvalues();
  for (int i = 0; i < ec.size(); ++i) {
    const Cplx mapped = std::exp(ec[i] * 0.1);
    double best = 1e9;
    for (int j = 0; j < ed.size(); ++j) best = std::min(best, std::abs(ed[j] - mapped));
    CHECK(best < 1e-10);
  }
}

TEST_CASE("tiny step reduces to first-order Taylor") {
  const PlantModel p = build_two_area();
  const double ts = 1e-6;
  const DiscretePlant d = discretize_zoh(p, ts);
  const MatrixXd taylor = MatrixXd::Identity(p.states(), p.states()) + p.a_cont * ts;
  CHECK((d.ad - taylor).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("two-area discrete eigenvalues equal exp(s ts) to 1e-10") {
  const PlantModel p = build_two_area();
  const DiscretePlant d = discretize_zoh(p, 0.01);
  const Eigen::VectorXcd ec = p.a_cont.eigenvalues();
  const Eigen::VectorXcd ed = d.ad.eigenvalues();
  for (int i = 0; i < ec.size(); ++i) {
    const Cplx mapped = std::exp(ec[i] * 0.01);
    double best = 1e9;
    for (int j = 0; j < ed.size(); ++j) best = std::min(best, std::abs(ed[j] - mapped));
    CHECK(best < 1e-10);
  }
}

TEST_CASE("rest stays at rest") {
  const PlantModel p = build_two_area();
  const SimulationResult sim = simulate(p, 0.01, 2.0, {});
  CHECK(sim.window.samples.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ringdown spectrum peaks at the inter-area frequency") {
  const PlantModel p = build_two_area();
  double inter_hz = 0.0;
  for (const auto& m : p.modes)
    if (m.hz < 0.8) inter_hz = m.hz;
  SimulationOptions opts;
  opts.pulses.push_back({2, 1.0, 0.1, 0.5, "fault"});  // machine-3 channel
  const double ts = 0.01;
  const SimulationResult sim = simulate(p, ts, 42.0, opts);
  // machine 1 carries no local-mode content for an area-2 disturbance, so its
  // spectrum isolates the inter-area line; drop the pre-pulse lead-in
  const int n = 4000;
  VectorXd x = sim.window.samples.col(0).segment(120, n);
  x.array() -= x.mean();
  int peak_bin = 1;
  double peak_mag = 0.0;
  for (int k = 1; k <= n / 2; ++k) {
    const double mag = testutil::dft_mag(x, k);
    if (mag > peak_mag) {
      peak_mag = mag;
      peak_bin = k;
    }
  }
  const double bin_hz = 1.0 / (n * ts);
  CHECK(std::abs(peak_bin * bin_hz - inter_hz) <= bin_hz);
}

TEST_CASE("seeded measurement noise is reproducible") {
  const PlantModel p = build_two_area();
  SimulationOptions opts;
  opts.noise_std = 1e-4;
  opts.noise_seed = 99;
  const SimulationResult a = simulate(p, 0.01, 1.0, opts);
  const SimulationResult b = simulate(p, 0.01, 1.0, opts);
  CHECK((a.window.samples - b.window.samples).cwiseAbs().maxCoeff() == 0.0);
  opts.noise_seed = 100;
  const SimulationResult c = simulate(p, 0.01, 1.0, opts);
  CHECK((a.window.samples - c.window.samples).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("angle reference shift leaves speeds untouched") {
  const PlantModel p = build_two_area();
  SimulationOptions opts;
  opts.x0 = VectorXd::Zero(p.states());
  opts.x0.segment(0, 4).setConstant(0.0);
  opts.x0(4) = 1e-3;  // one machine nudged in speed
  const SimulationResult base = simulate(p, 0.01, 3.0, opts);
  opts.x0.segment(0, 4).array() += 0.7;  // constant added to every angle
  const SimulationResult shifted = simulate(p, 0.01, 3.0, opts);
  CHECK((base.window.samples - shifted.window.samples).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("undriven energy never increases") {
  const PlantModel p = build_two_area();
  SimulationOptions opts;
  opts.x0 = VectorXd::Zero(p.states());
  opts.x0(4) = 1e-3;
  opts.x0(6) = -5e-4;
  const SimulationResult sim = simulate(p, 0.01, 10.0, opts);
  // quadratic energy: rotor kinetic + spring potential (actuator states idle)
  const MatrixXd& ks = p.config.stiffness;
  const double wb = 2.0 * M_PI * p.config.base_freq;
  auto energy = [&](int row) {
    double e = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double w = sim.states(row, 4 + i);
      e += p.config.inertia_h[i] * w * w;  // (1/2) M w^2 with M = 2H
    }
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        const double dd = sim.states(row, i) - sim.states(row, j);
        e += 0.5 * (-ks(i, j)) * dd * dd / wb;  // spring across the pair
      }
    return e;
  };
  double prev = energy(0);
  for (int r = 1; r < sim.states.rows(); ++r) {
    const double cur = energy(r);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
}

TEST_CASE("oversampled integration matches the one-step hold") {
  const PlantModel p = build_two_area();
  const double ts = 0.01;
  SimulationOptions opts;
  opts.pulses.push_back({0, 0.05, 0.3, 0.4, "fault"});
  const SimulationResult coarse = simulate(p, ts, 2.0, opts);
  const SimulationResult fine = simulate(p, ts / 100.0, 2.0, opts);
  double worst = 0.0;
  const double scale = coarse.window.samples.cwiseAbs().maxCoeff();
  for (int r = 0; r < coarse.window.length(); ++r) {
    const int rf = r * 100;
    if (rf >= fine.window.length()) break;
    worst = std::max(worst,
                     (coarse.window.samples.row(r) - fine.window.samples.row(rf))
                         .cwiseAbs()
                         .maxCoeff());
  }
  CHECK(worst / scale < 1e-6);
}

TEST_CASE("pulse edges land on sample boundaries in either grid") {
  // a pulse that starts mid-sample is held to the enclosing samples; the
  // double-rate run must agree at shared instants per the ZOH contract above;
  // here just confirm the pulse actually injects
  const PlantModel p = build_two_area();
  SimulationOptions opts;
  opts.pulses.push_back({1, 0.5, 0.1, 0.2, "fault"});
  const SimulationResult sim = simulate(p, 0.01, 2.0, opts);
  CHECK(sim.window.samples.cwiseAbs().maxCoeff() > 0.0);
  REQUIRE(!sim.events.empty());
  CHECK(sim.events[0].time == doctest::Approx(0.5));
}

TEST_CASE("wind injection is band-limited and seeded") {
  const PlantModel p = build_two_area();
  SimulationOptions opts;
  WindSpec wind;
  wind.channel = 0;
  wind.amplitude = 0.05;
  wind.bandwidth_hz = 0.3;
  wind.seed = 5;
  opts.wind.push_back(wind);
  const SimulationResult a = simulate(p, 0.01, 20.0, opts);
  const SimulationResult b = simulate(p, 0.01, 20.0, opts);
  CHECK((a.window.samples - b.window.samples).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.window.samples.cwiseAbs().maxCoeff() > 0.0);
  // shaped injection: spectral mass above the plant's oscillatory range
  // (all modes sit below 1.1 Hz) stays small next to the excited band
  VectorXd x = a.window.samples.col(0);
  x.array() -= x.mean();
  const int n = static_cast<int>(x.size());
  double low = 0.0, high = 0.0;
  for (int k = 1; k <= n / 2; ++k) {
    const double f = k / (n * 0.01);
    const double mag = testutil::dft_mag(x, k);
    if (f <= 1.5)
      low += mag * mag;
    else
      high += mag * mag;
  }
  CHECK(low > 10.0 * high);
}

TEST_CASE("probe channels map machine ids to actuator inputs") {
  const PlantModel p = build_two_area();
  SimulationOptions opts;
  ProbeSignal probe;
  probe.machine = 2;
  probe.values = VectorXd::Constant(100, 0.02);
  opts.probes.push_back(probe);
  const SimulationResult sim = simulate(p, 0.01, 1.0, opts);
  CHECK(sim.window.samples.cwiseAbs().maxCoeff() > 0.0);
  REQUIRE(sim.inputs.size() == 1);
  CHECK(sim.inputs[0].machine == 2);
}

TEST_CASE("settling time reads the decay tail") {
  const int n = 1000;
  VectorXd x(n);
  for (int t = 0; t < n; ++t)
    x[t] = std::exp(-0.01 * t) * std::cos(0.2 * t);
  const double st = settling_time(x, 0.01, 0.05);
  // envelope falls to 5% at t = ln(20)/0.01 samples = ~300 samples = 3 s
  CHECK(st > 2.0);
  CHECK(st < 4.0);
  CHECK(settling_time(VectorXd::Zero(10), 0.01) == 0.0);
}

TEST_CASE("closed-loop eigenreport: zero gain reproduces the open loop") {
  const PlantModel p = build_two_area();
  // build a controller with zero gain through the synthesis path
  ArxCommonDen m;
  m.order_k = 2;
  m.ts = 0.01;
  m.den = (VectorXd(2) << -1.9, 0.905).finished();
  m.pairs = {{1, 3}};
  m.num = {(VectorXd(3) << 1e-3, 0.0, 0.0).finished()};
  SelectedLoop loop{1, 1, 3, 1.0};
  WacController c = synthesize(m, loop, {});
  c.lqr.gain.setZero();
  const DampingReport rep = closed_loop_eigen(p, {c}, 0.01);
  CHECK(std::abs(rep.open_inter_area.hz - rep.closed_inter_area.hz) < 1e-9);
  CHECK(std::abs(rep.open_inter_area.zeta - rep.closed_inter_area.zeta) < 1e-9);
}
