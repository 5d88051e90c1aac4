// wadc — wide-area damping control toolkit.
//
// Every stage of the online loop is exposed as a subcommand with file-based
// I/O so stages can be chained through artifacts; `pipeline` runs the whole
// loop in-process.  Set WADC_VERBOSE=1 for progress logging on stderr.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wadc/json_io.hpp"
#include "wadc/pipeline.hpp"

namespace {

bool verbose() {
  const char* v = std::getenv("WADC_VERBOSE");
  return v && std::string(v) != "0" && std::string(v)[0] != '\0';
}

void log_stage(const std::string& msg) {
  if (verbose()) std::cerr << "[wadc] " << msg << "\n";
}

wadc::PipelineConfig load_config(const std::string& path, unsigned seed, bool seed_set) {
  wadc::PipelineConfig config;
  if (!path.empty()) config = wadc::config_from_json(wadc::read_json(path));
  if (seed_set) config.seed = seed;
  return config;
}

int cmd_simulate(const std::string& plant_name, const std::string& out,
                 const std::string& probe_out, double duration, double ts, int pulse_channel,
                 double pulse_start, double pulse_duration, double pulse_amplitude,
                 double probe_amplitude, double probe_chip, double noise_std, unsigned seed) {
  const wadc::PlantModel plant = wadc::plant_by_name(plant_name);
  wadc::SimulationOptions opts;
  if (pulse_amplitude != 0.0)
    opts.pulses.push_back({pulse_channel, pulse_start, pulse_duration, pulse_amplitude, "torque"});
  if (probe_amplitude != 0.0) {
    const int n = static_cast<int>(std::lround(duration / ts));
    for (int machine = 1; machine <= plant.machines(); ++machine) {
      wadc::ProbeSignal sig;
      sig.machine = machine;
      sig.values = wadc::prbs(n, ts, probe_amplitude, probe_chip, seed * 7919u + 1000u + machine);
      opts.probes.push_back(sig);
    }
  }
  opts.noise_std = noise_std;
  opts.noise_seed = seed + 29u;
  log_stage("simulating " + plant_name + " for " + std::to_string(duration) + " s");
  const wadc::SimulationResult sim = wadc::simulate(plant, ts, duration, opts);
  wadc::write_window_csv(out, sim.window);
  if (!probe_out.empty() && !sim.inputs.empty())
    wadc::write_probe_csv(probe_out, sim.inputs, ts);
  return 0;
}

int cmd_cluster(const std::string& in, const std::string& out, int k, int l, double sigma,
                bool squared, unsigned seed) {
  const wadc::MeasurementWindow window = wadc::read_window_csv(in);
  wadc::GroupingParams params;
  params.l = l;
  params.sigma = sigma;
  params.squared_distance = squared;
  params.seed = seed;
  log_stage("clustering " + std::to_string(window.machines()) + " machines, k=" +
            std::to_string(k));
  const wadc::CoherencyGrouping grouping = wadc::stage_cluster(window, k, params);
  wadc::write_json(out, wadc::grouping_to_json(grouping));
  return 0;
}

int cmd_identify(const std::vector<std::string>& ins, const std::vector<std::string>& probes,
                 const std::string& out, int order, int n, double tol, int max_iter) {
  if (ins.size() != probes.size() || ins.empty())
    throw std::invalid_argument("identify needs matching --in/--probes file lists");
  std::vector<wadc::Experiment> experiments;
  for (size_t i = 0; i < ins.size(); ++i)
    experiments.push_back({wadc::read_window_csv(ins[i]), wadc::read_probe_csv(probes[i])});
  if (n <= 0) n = experiments.front().outputs.length() - order - 1;
  wadc::IdentifyOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  log_stage("identifying order-" + std::to_string(order) + " model from " +
            std::to_string(ins.size()) + " experiment(s)");
  const wadc::ArxCommonDen model = wadc::stage_identify(experiments, order, n, opts);
  wadc::write_json(out, wadc::model_to_json(model));
  return 0;
}

int cmd_select(const std::string& model_path, const std::string& grouping_path,
               const std::string& out, const std::string& reduced_out, double band_lo,
               double band_hi, double reduce_threshold, double reject_below) {
  const wadc::ArxCommonDen model = wadc::model_from_json(wadc::read_json(model_path));
  const wadc::CoherencyGrouping grouping =
      wadc::grouping_from_json(wadc::read_json(grouping_path));
  log_stage("selecting control loops in band [" + std::to_string(band_lo) + ", " +
            std::to_string(band_hi) + "] Hz");
  const wadc::SelectionResult sel =
      wadc::stage_select(model, grouping, band_lo, band_hi, reduce_threshold, reject_below);
  wadc::write_json(out, wadc::selection_to_json(sel.selection, sel.residues));
  if (!reduced_out.empty())
    wadc::write_json(reduced_out, wadc::model_to_json(sel.reduced_model));
  return 0;
}

int cmd_synthesize(const std::string& model_path, const std::string& selection_path,
                   const std::string& out, double rho, double u_limit, double q_noise,
                   double r_noise) {
  const wadc::ArxCommonDen model = wadc::model_from_json(wadc::read_json(model_path));
  wadc::ControlLoopSelection selection;
  wadc::ResidueMatrix residues;
  wadc::selection_from_json(wadc::read_json(selection_path), selection, residues);
  wadc::SynthesisOptions opts;
  opts.rho = rho;
  opts.u_limit = u_limit;
  opts.q_noise = q_noise;
  opts.r_noise = r_noise;
  log_stage("synthesizing " + std::to_string(selection.loops.size()) + " controller(s)");
  const std::vector<wadc::WacController> controllers =
      wadc::stage_synthesize(model, selection, opts);
  wadc::write_json(out, wadc::controllers_to_json(controllers));
  return 0;
}

int cmd_closedloop(const std::string& plant_name, const std::string& controllers_path,
                   const std::string& out, double ts) {
  const wadc::PlantModel plant = wadc::plant_by_name(plant_name);
  const std::vector<wadc::WacController> controllers =
      wadc::controllers_from_json(wadc::read_json(controllers_path));
  log_stage("closed-loop eigenanalysis on " + plant_name);
  const wadc::DampingReport damping = wadc::stage_closedloop(plant, controllers, ts);
  wadc::write_json(out, wadc::damping_to_json(damping));
  return 0;
}

int cmd_pipeline(const wadc::PipelineConfig& config, const wadc::Scenario& scenario,
                 const std::string& out_dir) {
  log_stage("running pipeline on " + (scenario.window_csv.empty() ? scenario.plant
                                                                  : scenario.window_csv));
  wadc::run_pipeline(config, scenario, out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wide-area damping control toolkit"};
  app.require_subcommand(1);

  std::string config_path, in_path, out_path, plant_name = "twoarea";
  unsigned seed = 0;
  bool seed_set = false;
  std::string current_stage = "cli";

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a plant preset to a ringdown CSV");
  std::string sim_probe_out;
  double sim_duration = 20.0, sim_ts = 0.01;
  int sim_pulse_channel = 2;
  double sim_pulse_start = 1.0, sim_pulse_duration = 0.1, sim_pulse_amplitude = 0.5;
  double sim_probe_amplitude = 0.0, sim_probe_chip = 0.1, sim_noise = 0.0;
  sim->add_option("--plant", plant_name, "plant preset")
      ->check(CLI::IsMember({"twoarea", "tenmachine"}));
  sim->add_option("--out", out_path, "output window CSV")->required();
  sim->add_option("--probe-out", sim_probe_out, "output probe CSV (with --probe-amplitude)");
  sim->add_option("--duration", sim_duration, "simulation length, s");
  sim->add_option("--ts", sim_ts, "sample period, s");
  sim->add_option("--pulse-channel", sim_pulse_channel, "disturbance channel (0-based)");
  sim->add_option("--pulse-start", sim_pulse_start, "pulse start, s");
  sim->add_option("--pulse-duration", sim_pulse_duration, "pulse width, s");
  sim->add_option("--pulse-amplitude", sim_pulse_amplitude, "pulse torque, pu (0 disables)");
  sim->add_option("--probe-amplitude", sim_probe_amplitude, "PRBS probe amplitude (0 disables)");
  sim->add_option("--probe-chip", sim_probe_chip, "PRBS chip period, s");
  sim->add_option("--noise-std", sim_noise, "measurement noise std dev");
  sim->add_option("--seed", seed, "RNG seed");

  // cluster
  auto* clu = app.add_subcommand("cluster", "group machines from a ringdown window CSV");
  int clu_k = 2, clu_l = 0;
  double clu_sigma = 0.0;
  bool clu_squared = false;
  clu->add_option("--in", in_path, "input window CSV")->required();
  clu->add_option("--out", out_path, "output grouping JSON")->required();
  clu->add_option("--k", clu_k, "number of groups");
  clu->add_option("--l", clu_l, "Nystrom landmark count (0 = all machines)");
  clu->add_option("--sigma", clu_sigma, "similarity bandwidth (0 = median heuristic)");
  clu->add_flag("--squared", clu_squared, "use squared distances in the similarity");
  clu->add_option("--seed", seed, "RNG seed");

  // identify
  auto* ide = app.add_subcommand("identify", "fit a common-denominator ARX model");
  std::vector<std::string> ide_ins, ide_probes;
  int ide_order = 10, ide_n = 0, ide_max_iter = 100;
  double ide_tol = 1e-4;
  ide->add_option("--in", ide_ins, "window CSV (repeat per experiment)")->required();
  ide->add_option("--probes", ide_probes, "probe CSV (repeat per experiment)")->required();
  ide->add_option("--out", out_path, "output model JSON")->required();
  ide->add_option("--order", ide_order, "shared denominator order");
  ide->add_option("--n", ide_n, "regressor rows (0 = max available)");
  ide->add_option("--tol", ide_tol, "convergence tolerance on the stacked residual");
  ide->add_option("--max-iter", ide_max_iter, "iteration cap");

  // select
  auto* sel = app.add_subcommand("select", "pick control loops from model + grouping");
  std::string sel_model, sel_grouping, sel_reduced_out;
  double sel_band_lo = 0.1, sel_band_hi = 0.8, sel_reduce = 0.01, sel_reject = 0.05;
  sel->add_option("--model", sel_model, "model JSON")->required();
  sel->add_option("--grouping", sel_grouping, "grouping JSON")->required();
  sel->add_option("--out", out_path, "output selection JSON")->required();
  sel->add_option("--reduced-out", sel_reduced_out, "reduced model JSON (for synthesize)");
  sel->add_option("--band-lo", sel_band_lo, "band lower edge, Hz");
  sel->add_option("--band-hi", sel_band_hi, "band upper edge, Hz");
  sel->add_option("--reduce-threshold", sel_reduce, "relative residue cut for order reduction");
  sel->add_option("--reject-below", sel_reject, "normalized residue floor for loop retention");

  // synthesize
  auto* syn = app.add_subcommand("synthesize", "design LQG controllers for selected loops");
  std::string syn_model, syn_selection;
  double syn_rho = 1.0, syn_ulimit = 0.05, syn_q = 1e-5, syn_r = 1e-3;
  syn->add_option("--model", syn_model, "reduced model JSON")->required();
  syn->add_option("--selection", syn_selection, "selection JSON")->required();
  syn->add_option("--out", out_path, "output controllers JSON")->required();
  syn->add_option("--rho", syn_rho, "control effort weight");
  syn->add_option("--u-limit", syn_ulimit, "control saturation, pu");
  syn->add_option("--q-noise", syn_q, "process noise intensity");
  syn->add_option("--r-noise", syn_r, "measurement noise intensity");

  // closedloop
  auto* clo = app.add_subcommand("closedloop", "closed-loop eigenanalysis against a plant");
  std::string clo_controllers;
  double clo_ts = 0.01;
  clo->add_option("--plant", plant_name, "plant preset")
      ->check(CLI::IsMember({"twoarea", "tenmachine"}));
  clo->add_option("--controllers", clo_controllers, "controllers JSON")->required();
  clo->add_option("--out", out_path, "output damping report JSON")->required();
  clo->add_option("--ts", clo_ts, "sample period, s");

  // pipeline
  auto* pip = app.add_subcommand("pipeline", "run the full online loop");
  std::string pip_window, pip_probes;
  int pip_disturbances = 1;
  bool pip_shift = false;
  pip->add_option("--config", config_path, "pipeline config JSON");
  pip->add_option("--plant", plant_name, "plant preset")
      ->check(CLI::IsMember({"twoarea", "tenmachine"}));
  pip->add_option("--in", pip_window, "external window CSV instead of a plant preset");
  pip->add_option("--probes", pip_probes, "external probe CSV (with --in)");
  pip->add_option("--out", out_path, "artifact output directory")->required();
  pip->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) { seed_set = true; });
  pip->add_option("--disturbances", pip_disturbances, "scripted disturbance count");
  pip->add_flag("--coupling-shift", pip_shift, "weaken the tie after the first disturbance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      current_stage = "simulate";
      return cmd_simulate(plant_name, out_path, sim_probe_out, sim_duration, sim_ts,
                          sim_pulse_channel, sim_pulse_start, sim_pulse_duration,
                          sim_pulse_amplitude, sim_probe_amplitude, sim_probe_chip, sim_noise,
                          seed);
    }
    if (clu->parsed()) {
      current_stage = "cluster";
      return cmd_cluster(in_path, out_path, clu_k, clu_l, clu_sigma, clu_squared, seed);
    }
    if (ide->parsed()) {
      current_stage = "identify";
      return cmd_identify(ide_ins, ide_probes, out_path, ide_order, ide_n, ide_tol,
                          ide_max_iter);
    }
    if (sel->parsed()) {
      current_stage = "select";
      return cmd_select(sel_model, sel_grouping, out_path, sel_reduced_out, sel_band_lo,
                        sel_band_hi, sel_reduce, sel_reject);
    }
    if (syn->parsed()) {
      current_stage = "synthesize";
      return cmd_synthesize(syn_model, syn_selection, out_path, syn_rho, syn_ulimit, syn_q,
                            syn_r);
    }
    if (clo->parsed()) {
      current_stage = "closedloop";
      return cmd_closedloop(plant_name, clo_controllers, out_path, clo_ts);
    }
    if (pip->parsed()) {
      current_stage = "pipeline";
      wadc::PipelineConfig config = load_config(config_path, seed, seed_set);
      wadc::Scenario scenario;
      scenario.plant = plant_name;
      scenario.window_csv = pip_window;
      scenario.probe_csv = pip_probes;
      scenario.disturbances = pip_disturbances;
      scenario.coupling_shift = pip_shift;
      return cmd_pipeline(config, scenario, out_path);
    }
  } catch (const std::exception& e) {
    wadc::Json err;
    err["error"] = e.what();
    err["stage"] = current_stage;
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
