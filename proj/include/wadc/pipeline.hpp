#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wadc/coherency.hpp"
#include "wadc/measurements.hpp"
#include "wadc/modal.hpp"
#include "wadc/plant.hpp"
#include "wadc/sysid.hpp"
#include "wadc/wac.hpp"

namespace wadc {

/// One knob file for the whole online loop; every default mirrors the
/// owning module's default.
struct PipelineConfig {
  // windowing
  double ts = 0.01;
  int window_samples = 500;
  int stream_capacity = 6000;
  // coherency
  int k = 2;
  int nystrom_l = 0;    // 0: all machines are landmarks
  double sigma = 0.0;   // <= 0: median heuristic
  bool squared_distance = false;
  // identification; the probe run replays the last disturbance, drops the
  // forced samples, and identifies on the decimated ringdown-plus-probe tail
  // (the slow rate decorrelates the lag columns and speeds up convergence)
  int arx_order = 12;
  int ident_window = 0;  // N; 0 derives it from the decimated probe window
  double ident_tol = 1e-6;
  int ident_max_iter = 500;
  int ident_decimate = 5;          // identify every Nth sample
  double probe_duration_s = 30.0;  // post-disturbance probing horizon
  bool probe_sequential = false;   // default: all machines probed at once
  double probe_amplitude = 0.02;
  double probe_chip_s = 0.1;
  // modal selection
  double band_lo_hz = 0.1;
  double band_hi_hz = 0.8;
  double reduce_threshold = 0.01;
  double reject_below = 0.05;
  // controller; the q/r ratio sets the estimator bandwidth, and keeping it
  // near 1e-4 makes the filter track only the designed mode so the feedback
  // does not excite off-model dynamics
  double rho = 0.02;
  double q_noise = 1e-5;
  double r_noise = 0.1;
  double u_limit = 0.05;
  // trigger
  double trigger_threshold = 1e-3;  // pu RMS
  double trigger_window_s = 1.0;
  // validation
  double validation_duration_s = 90.0;
  double sim_noise_std = 0.0;
  std::uint64_t seed = 0;
};

/// Scripted run: a plant preset with timed torque pulses, or an external
/// measurement CSV.
struct Scenario {
  std::string plant = "twoarea";  // twoarea | tenmachine
  int disturbances = 1;           // number of scripted fault pulses
  double disturbance_amplitude = 0.5;  // pu torque
  double disturbance_duration = 0.8;   // s; slow pulse favors inter-area modes
  int disturbance_channel = 2;         // 0-based; machine 3 by default
  /// When set, the plant switches to the post_* couplings before the second
  /// disturbance: machine 3 re-anchors to area 1 and machine 4 drifts loose,
  /// shifting which machines swing together.
  bool coupling_shift = false;
  std::vector<double> post_intra = {0.631, 0.05};
  std::vector<double> post_tie = {0.6, 0.02, 0.6, 0.02};
  std::string window_csv;  // external data path; skips simulation
  std::string probe_csv;   // optional probe record paired with window_csv
};

struct GroupingEvent {
  double trigger_time = 0.0;  // s; < 0 for the baseline (untriggered) pass
  double magnitude = 0.0;     // pu RMS at the trigger
  CoherencyGrouping grouping;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  std::string plant_name;
  std::vector<GroupingEvent> groupings;
  ArxCommonDen model;          // full identified order
  ArxCommonDen reduced_model;  // after residue-based reduction
  ModeDescriptor mode;
  ResidueMatrix residues;
  ControlLoopSelection selection;
  std::vector<WacController> controllers;
  bool has_model = false;
  bool has_damping = false;
  DampingReport damping;
  double open_settling_s = 0.0;
  double closed_settling_s = 0.0;
  double max_control_pu = 0.0;
  std::vector<std::string> artifacts;   // paths relative to the output dir
  std::vector<StageTiming> timings;     // written separately from the report

  int regroupings() const { return static_cast<int>(groupings.size()); }
};

/// Full online loop: stream -> trigger -> regroup -> identify -> select ->
/// synthesize -> validate, reusing estimator state unless the selected loop
/// changes. Artifacts land in out_dir (created if missing); empty means no
/// files are written.
RunReport run_pipeline(const PipelineConfig& config, const Scenario& scenario,
                       const std::string& out_dir = "");

/// Stage helpers shared by the command-line tool; each is exactly the code
/// path run_pipeline uses.
CoherencyGrouping stage_cluster(const MeasurementWindow& window, int k,
                                const GroupingParams& params);

ArxCommonDen stage_identify(const std::vector<Experiment>& experiments, int order_k, int N,
                            const IdentifyOptions& opts);

struct SelectionResult {
  ModalDecomposition reduced;
  ArxCommonDen reduced_model;
  ModeDescriptor mode;
  ResidueMatrix residues;
  ControlLoopSelection selection;
};

/// control_ts > 0 resamples the reduced model to that rate (the identified
/// model may live at a slower measurement rate than the actuation loop).
SelectionResult stage_select(const ArxCommonDen& model, const CoherencyGrouping& grouping,
                             double band_lo_hz, double band_hi_hz, double reduce_threshold,
                             double reject_below, double control_ts = 0.0);

std::vector<WacController> stage_synthesize(const ArxCommonDen& reduced_model,
                                            const ControlLoopSelection& selection,
                                            const SynthesisOptions& opts);

DampingReport stage_closedloop(const PlantModel& plant,
                               const std::vector<WacController>& controllers, double ts);

PlantModel plant_by_name(const std::string& name);

}  // namespace wadc
