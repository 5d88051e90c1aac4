#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wadc/json_io.hpp"
#include "wadc/pipeline.hpp"

namespace py = pybind11;
using namespace wadc;

PYBIND11_MODULE(wadc, m) {
  m.doc() = "Online wide-area damping control: coherency grouping, "
            "common-denominator ARX identification, residue-based loop "
            "selection, LQG synthesis, and a linearized multi-machine plant.";

  // ---- measurements ----
  py::class_<MeasurementWindow>(m, "MeasurementWindow")
      .def(py::init<>())
      .def(py::init([](const Eigen::MatrixXd& samples, double ts, double start_time) {
             MeasurementWindow w;
             w.samples = samples;
             w.ts = ts;
             w.start_time = start_time;
             return w;
           }),
           py::arg("samples"), py::arg("ts") = 0.01, py::arg("start_time") = 0.0)
      .def_readwrite("ts", &MeasurementWindow::ts)
      .def_readwrite("start_time", &MeasurementWindow::start_time)
      .def_readwrite("samples", &MeasurementWindow::samples)
      .def("length", &MeasurementWindow::length)
      .def("machines", &MeasurementWindow::machines);

  py::class_<ProbeSignal>(m, "ProbeSignal")
      .def(py::init<>())
      .def(py::init([](MachineId machine, const Eigen::VectorXd& values) {
             return ProbeSignal{machine, values};
           }),
           py::arg("machine"), py::arg("values"))
      .def_readwrite("machine", &ProbeSignal::machine)
      .def_readwrite("values", &ProbeSignal::values);

  py::class_<DisturbanceEvent>(m, "DisturbanceEvent")
      .def(py::init<>())
      .def_readwrite("time", &DisturbanceEvent::time)
      .def_readwrite("magnitude", &DisturbanceEvent::magnitude)
      .def_readwrite("kind", &DisturbanceEvent::kind);

  py::class_<SampleStream>(m, "SampleStream")
      .def(py::init<int, double, int, double>(), py::arg("machines"),
           py::arg("ts") = 0.01, py::arg("capacity") = 6000, py::arg("start_time") = 0.0)
      .def("append", &SampleStream::append, py::arg("new_rows"))
      .def("window", &SampleStream::window, py::arg("n"))
      .def("size", &SampleStream::size)
      .def("capacity", &SampleStream::capacity)
      .def("machines", &SampleStream::machines)
      .def("ts", &SampleStream::ts)
      .def("latest_time", &SampleStream::latest_time);

  m.def("detect_disturbance", &detect_disturbance, py::arg("window"), py::arg("threshold"),
        "Fires when any machine's windowed RMS exceeds the threshold.");
  m.def("prbs", &prbs, py::arg("n_samples"), py::arg("ts"), py::arg("amplitude"),
        py::arg("chip_period"), py::arg("seed"),
        "Seeded +/- amplitude binary excitation held for chip_period seconds.");
  m.def("write_window_csv", &write_window_csv, py::arg("path"), py::arg("window"));
  m.def("read_window_csv", &read_window_csv, py::arg("path"));
  m.def("write_probe_csv", &write_probe_csv, py::arg("path"), py::arg("probes"),
        py::arg("ts"), py::arg("start_time") = 0.0);
  m.def("read_probe_csv", &read_probe_csv, py::arg("path"));

  // ---- coherency ----
  py::class_<SimilarityOptions>(m, "SimilarityOptions")
      .def(py::init<>())
      .def_readwrite("sigma", &SimilarityOptions::sigma)
      .def_readwrite("squared_distance", &SimilarityOptions::squared_distance)
      .def_readwrite("landmark_override", &SimilarityOptions::landmark_override);

  py::class_<SimilarityFactors>(m, "SimilarityFactors")
      .def_readonly("a_block", &SimilarityFactors::a_block)
      .def_readonly("b_block", &SimilarityFactors::b_block)
      .def_readonly("sigma", &SimilarityFactors::sigma)
      .def_readonly("l", &SimilarityFactors::l)
      .def_readonly("n", &SimilarityFactors::n)
      .def_readonly("perm", &SimilarityFactors::perm);

  py::class_<SpectralEmbedding>(m, "SpectralEmbedding")
      .def_readonly("u_rows", &SpectralEmbedding::u_rows)
      .def_readonly("eigenvalues", &SpectralEmbedding::eigenvalues)
      .def_readonly("degree", &SpectralEmbedding::degree)
      .def_readonly("zero_rows", &SpectralEmbedding::zero_rows)
      .def_readonly("suggested_k", &SpectralEmbedding::suggested_k);

  py::class_<GroupingParams>(m, "GroupingParams")
      .def(py::init<>())
      .def_readwrite("l", &GroupingParams::l)
      .def_readwrite("sigma", &GroupingParams::sigma)
      .def_readwrite("squared_distance", &GroupingParams::squared_distance)
      .def_readwrite("seed", &GroupingParams::seed)
      .def_readwrite("landmark_override", &GroupingParams::landmark_override);

  py::class_<CoherencyGrouping>(m, "CoherencyGrouping")
      .def_readonly("assignment", &CoherencyGrouping::assignment)
      .def_readonly("k", &CoherencyGrouping::k)
      .def_readonly("centers", &CoherencyGrouping::centers)
      .def_readonly("inertia", &CoherencyGrouping::inertia)
      .def_readonly("elapsed", &CoherencyGrouping::elapsed)
      .def_readonly("empty_cluster", &CoherencyGrouping::empty_cluster)
      .def_readonly("eigenvalues", &CoherencyGrouping::eigenvalues)
      .def_readonly("sigma", &CoherencyGrouping::sigma)
      .def_readonly("l", &CoherencyGrouping::l)
      .def_readonly("seed", &CoherencyGrouping::seed)
      .def_readonly("suggested_k", &CoherencyGrouping::suggested_k)
      .def("groups", &CoherencyGrouping::groups,
           "group id -> ascending 1-based machine ids");

  m.def("similarity_factors", &similarity_factors, py::arg("window"), py::arg("l"),
        py::arg("seed"), py::arg_v("opts", SimilarityOptions(), "SimilarityOptions()"));
  m.def("approximate_row_sums", &approximate_row_sums, py::arg("factors"),
        "Row sums of the completed similarity without forming the full matrix.");
  m.def("laplacian_embedding", &laplacian_embedding, py::arg("factors"),
        py::arg("degree_permuted"), py::arg("j"));
  m.def("kmeans_cluster", &kmeans_cluster, py::arg("embedding"), py::arg("k"),
        py::arg("seed"));
  m.def("group_machines", &group_machines, py::arg("window"), py::arg("k"),
        py::arg_v("params", GroupingParams(), "GroupingParams()"),
        "Spectral coherency grouping of the window's machines into k groups.");

  // ---- plant ----
  py::class_<PlantConfig>(m, "PlantConfig")
      .def(py::init<>())
      .def_readwrite("inertia_h", &PlantConfig::inertia_h)
      .def_readwrite("damping_d", &PlantConfig::damping_d)
      .def_readwrite("stiffness", &PlantConfig::stiffness)
      .def_readwrite("actuator", &PlantConfig::actuator)
      .def_readwrite("disturbance", &PlantConfig::disturbance)
      .def_readwrite("base_freq", &PlantConfig::base_freq)
      .def_readwrite("actuator_lag", &PlantConfig::actuator_lag);

  py::class_<PlantMode>(m, "PlantMode")
      .def_readonly("hz", &PlantMode::hz)
      .def_readonly("zeta", &PlantMode::zeta)
      .def_readonly("eigenvalue", &PlantMode::eigenvalue);

  py::class_<PlantModel>(m, "PlantModel")
      .def_readonly("config", &PlantModel::config)
      .def_readonly("a_cont", &PlantModel::a_cont)
      .def_readonly("b_cont", &PlantModel::b_cont)
      .def_readonly("b_dist", &PlantModel::b_dist)
      .def_readonly("c_out", &PlantModel::c_out)
      .def_readonly("modes", &PlantModel::modes)
      .def_readonly("stable", &PlantModel::stable)
      .def("machines", &PlantModel::machines)
      .def("states", &PlantModel::states);

  py::class_<PulseSpec>(m, "PulseSpec")
      .def(py::init<>())
      .def_readwrite("channel", &PulseSpec::channel)
      .def_readwrite("start", &PulseSpec::start)
      .def_readwrite("duration", &PulseSpec::duration)
      .def_readwrite("amplitude", &PulseSpec::amplitude)
      .def_readwrite("kind", &PulseSpec::kind);

  py::class_<WindSpec>(m, "WindSpec")
      .def(py::init<>())
      .def_readwrite("channel", &WindSpec::channel)
      .def_readwrite("amplitude", &WindSpec::amplitude)
      .def_readwrite("bandwidth_hz", &WindSpec::bandwidth_hz)
      .def_readwrite("seed", &WindSpec::seed);

  py::class_<SimulationOptions>(m, "SimulationOptions")
      .def(py::init<>())
      .def_readwrite("pulses", &SimulationOptions::pulses)
      .def_readwrite("wind", &SimulationOptions::wind)
      .def_readwrite("probes", &SimulationOptions::probes)
      .def_readwrite("noise_std", &SimulationOptions::noise_std)
      .def_readwrite("noise_seed", &SimulationOptions::noise_seed)
      .def_readwrite("x0", &SimulationOptions::x0);

  py::class_<SimulationResult>(m, "SimulationResult")
      .def_readonly("window", &SimulationResult::window)
      .def_readonly("inputs", &SimulationResult::inputs)
      .def_readonly("events", &SimulationResult::events)
      .def_readonly("states", &SimulationResult::states)
      .def("relative_speed", &SimulationResult::relative_speed, py::arg("i"), py::arg("j"));

  py::class_<TwoAreaOverrides>(m, "TwoAreaOverrides")
      .def(py::init<>())
      .def_readwrite("intra_stiffness", &TwoAreaOverrides::intra_stiffness)
      .def_readwrite("tie_stiffness", &TwoAreaOverrides::tie_stiffness)
      .def_readwrite("inertia", &TwoAreaOverrides::inertia)
      .def_readwrite("damping", &TwoAreaOverrides::damping)
      .def_readwrite("actuator_lag", &TwoAreaOverrides::actuator_lag);

  m.def("build_two_area", &build_two_area,
        py::arg_v("overrides", TwoAreaOverrides(), "TwoAreaOverrides()"),
        "Four machines in two stiff pairs; one inter-area mode near 0.6 Hz.");
  m.def("build_ten_machine", &build_ten_machine,
        "Ten machines in four strongly coupled blocks with weak ties.");
  m.def("build_plant", &build_plant, py::arg("config"));
  m.def("plant_by_name", &plant_by_name, py::arg("name"));
  m.def("simulate", &simulate, py::arg("model"), py::arg("ts"), py::arg("duration"),
        py::arg_v("opts", SimulationOptions(), "SimulationOptions()"));
  m.def("settling_time", &settling_time, py::arg("signal"), py::arg("ts"),
        py::arg("frac") = 0.05,
        "Time after which |x| stays within frac * max|x|.");

  // ---- identification ----
  py::class_<ArxCommonDen>(m, "ArxCommonDen")
      .def(py::init<>())
      .def_readwrite("order_k", &ArxCommonDen::order_k)
      .def_readwrite("den", &ArxCommonDen::den)
      .def_readwrite("pairs", &ArxCommonDen::pairs)
      .def_readwrite("num", &ArxCommonDen::num)
      .def_readwrite("ts", &ArxCommonDen::ts)
      .def_readonly("fit", &ArxCommonDen::fit)
      .def_readonly("iterations", &ArxCommonDen::iterations)
      .def_readonly("converged", &ArxCommonDen::converged)
      .def_readwrite("stable", &ArxCommonDen::stable)
      .def("pair_index", &ArxCommonDen::pair_index, py::arg("output"), py::arg("input"))
      .def("numerator", &ArxCommonDen::numerator, py::arg("output"), py::arg("input"),
           py::return_value_policy::copy);

  py::class_<Experiment>(m, "Experiment")
      .def(py::init<>())
      .def(py::init([](const MeasurementWindow& outputs, std::vector<ProbeSignal> inputs) {
             return Experiment{outputs, std::move(inputs)};
           }),
           py::arg("outputs"), py::arg("inputs"))
      .def_readwrite("outputs", &Experiment::outputs)
      .def_readwrite("inputs", &Experiment::inputs);

  py::class_<IdentifyOptions>(m, "IdentifyOptions")
      .def(py::init<>())
      .def_readwrite("tol", &IdentifyOptions::tol)
      .def_readwrite("max_iter", &IdentifyOptions::max_iter)
      .def_readwrite("init_num", &IdentifyOptions::init_num);

  m.def("identify",
        py::overload_cast<const std::vector<Experiment>&, int, int,
                          const IdentifyOptions&>(&identify),
        py::arg("experiments"), py::arg("order_k"), py::arg("n"),
        py::arg_v("opts", IdentifyOptions(), "IdentifyOptions()"),
        "Alternating least squares for the common-denominator MIMO ARX model.");
  m.def("identify",
        py::overload_cast<const MeasurementWindow&, const std::vector<ProbeSignal>&, int,
                          int, const IdentifyOptions&>(&identify),
        py::arg("outputs"), py::arg("inputs"), py::arg("order_k"), py::arg("n"),
        py::arg_v("opts", IdentifyOptions(), "IdentifyOptions()"));
  m.def("simulate_arx", &simulate_arx, py::arg("model"), py::arg("inputs"),
        py::arg("n_samples"),
        "Replays the model's difference equation from rest for given inputs.");

  // ---- modal analysis and loop selection ----
  py::class_<PartialFractions>(m, "PartialFractions")
      .def_readonly("poles", &PartialFractions::poles)
      .def_readonly("residues", &PartialFractions::residues)
      .def_readonly("direct", &PartialFractions::direct)
      .def_readonly("near_repeated", &PartialFractions::near_repeated)
      .def_readonly("clusters", &PartialFractions::clusters)
      .def("eval", &PartialFractions::eval, py::arg("x"));

  m.def("poly_roots", &poly_roots, py::arg("coeffs_desc"),
        "Roots via companion-matrix eigenvalues; coefficients descending.");
  m.def("poly_from_roots", &poly_from_roots, py::arg("roots"));
  m.def("polyval",
        py::overload_cast<const Eigen::VectorXd&, Cplx>(&polyval),
        py::arg("coeffs_desc"), py::arg("x"));
  m.def("partial_fraction_expand", &partial_fraction_expand, py::arg("num_desc"),
        py::arg("den_desc"), py::arg("cluster_tol") = 1e-7,
        "num/den as quotient polynomial plus simple-pole terms r/(x - p).");

  py::class_<ModalDecomposition>(m, "ModalDecomposition")
      .def_readonly("z_poles", &ModalDecomposition::z_poles)
      .def_readonly("s_poles", &ModalDecomposition::s_poles)
      .def_readonly("residues", &ModalDecomposition::residues)
      .def_readonly("s_residues", &ModalDecomposition::s_residues)
      .def_readonly("direct", &ModalDecomposition::direct)
      .def_readonly("pairs", &ModalDecomposition::pairs)
      .def_readonly("ts", &ModalDecomposition::ts)
      .def_readonly("near_repeated", &ModalDecomposition::near_repeated)
      .def_readonly("branch_warning", &ModalDecomposition::branch_warning)
      .def("eval_pair", &ModalDecomposition::eval_pair, py::arg("pair_idx"), py::arg("z"));

  py::class_<ModeDescriptor>(m, "ModeDescriptor")
      .def(py::init<>())
      .def_readwrite("frequency", &ModeDescriptor::frequency)
      .def_readwrite("damping_ratio", &ModeDescriptor::damping_ratio)
      .def_readwrite("pole_index", &ModeDescriptor::pole_index);

  py::class_<ResidueMatrix>(m, "ResidueMatrix")
      .def_readonly("values", &ResidueMatrix::values)
      .def_readonly("mode", &ResidueMatrix::mode)
      .def_readonly("outputs", &ResidueMatrix::outputs)
      .def_readonly("inputs", &ResidueMatrix::inputs);

  py::class_<SelectedLoop>(m, "SelectedLoop")
      .def(py::init<>())
      .def(py::init([](int group, MachineId output, MachineId input, double residue) {
             return SelectedLoop{group, output, input, residue};
           }),
           py::arg("group"), py::arg("output"), py::arg("input"), py::arg("residue") = 0.0)
      .def_readwrite("group", &SelectedLoop::group)
      .def_readwrite("output", &SelectedLoop::output)
      .def_readwrite("input", &SelectedLoop::input)
      .def_readwrite("residue", &SelectedLoop::residue);

  py::class_<ControlLoopSelection>(m, "ControlLoopSelection")
      .def(py::init<>())
      .def_readwrite("loops", &ControlLoopSelection::loops)
      .def_readwrite("rejected", &ControlLoopSelection::rejected);

  m.def("decompose", &decompose, py::arg("model"), py::arg("cluster_tol") = 1e-7,
        "Shared-denominator pole/residue decomposition of all pairs.");
  m.def("partial_fractions", &partial_fractions, py::arg("model"), py::arg("pair"));
  m.def("to_continuous", &to_continuous, py::arg("decomp"),
        "In place: s = ln(z)/ts pole map; residues scaled by 1/ts.");
  m.def("reduce_order", &reduce_order, py::arg("decomp"), py::arg("rel_threshold"));
  m.def("dominant_mode", &dominant_mode, py::arg("decomp"), py::arg("band_lo_hz") = 0.1,
        py::arg("band_hi_hz") = 0.8,
        "Least-damped oscillatory pole inside the band.");
  m.def("residue_matrix_at_mode", &residue_matrix_at_mode, py::arg("decomp"),
        py::arg("mode"));
  m.def("select_loops", &select_loops, py::arg("residue_matrix"), py::arg("grouping"),
        py::arg("reject_below") = 0.05,
        "Per-group argmax (output, input); weak groups are rejected.");
  m.def("to_model", &to_model, py::arg("decomp"));

  // ---- controller synthesis ----
  py::class_<StateSpace>(m, "StateSpace")
      .def(py::init<>())
      .def_readwrite("a", &StateSpace::a)
      .def_readwrite("b", &StateSpace::b)
      .def_readwrite("c", &StateSpace::c)
      .def_readwrite("d", &StateSpace::d)
      .def_readwrite("ts", &StateSpace::ts)
      .def_readwrite("stable", &StateSpace::stable)
      .def("order", &StateSpace::order);

  py::class_<LqrSolution>(m, "LqrSolution")
      .def_readonly("gain", &LqrSolution::gain)
      .def_readonly("riccati", &LqrSolution::riccati)
      .def_readonly("rho", &LqrSolution::rho)
      .def_readonly("horizon_used", &LqrSolution::horizon_used)
      .def_readonly("converged", &LqrSolution::converged);

  py::class_<KalmanState>(m, "KalmanState")
      .def_readwrite("x_hat", &KalmanState::x_hat)
      .def_readwrite("cov", &KalmanState::cov)
      .def_readwrite("gain", &KalmanState::gain)
      .def_readwrite("q_noise", &KalmanState::q_noise)
      .def_readwrite("r_noise", &KalmanState::r_noise)
      .def_readwrite("h", &KalmanState::h);

  py::class_<SynthesisOptions>(m, "SynthesisOptions")
      .def(py::init<>())
      .def_readwrite("rho", &SynthesisOptions::rho)
      .def_readwrite("u_limit", &SynthesisOptions::u_limit)
      .def_readwrite("q_noise", &SynthesisOptions::q_noise)
      .def_readwrite("r_noise", &SynthesisOptions::r_noise)
      .def_readwrite("riccati_tol", &SynthesisOptions::riccati_tol)
      .def_readwrite("riccati_max_iter", &SynthesisOptions::riccati_max_iter);

  py::class_<WacController>(m, "WacController")
      .def_readonly("loop", &WacController::loop)
      .def_readonly("ss", &WacController::ss)
      .def_readonly("lqr", &WacController::lqr)
      .def_readonly("kf", &WacController::kf)
      .def_readonly("u_limit", &WacController::u_limit)
      .def_readonly("elapsed", &WacController::elapsed)
      .def_readonly("u_prev", &WacController::u_prev);

  m.def("realize", &realize, py::arg("model"), py::arg("pair"),
        "Controllable canonical form of the pair's loop transfer function.");
  m.def("dlqr", &dlqr, py::arg("ss"), py::arg("rho"), py::arg("tol") = 1e-9,
        py::arg("max_iter") = 10000,
        "Infinite-horizon discrete LQR by backward Riccati iteration.");
  m.def("kalman_init", &kalman_init, py::arg("ss"), py::arg("q_noise") = 1e-5,
        py::arg("r_noise") = 1e-3);
  m.def("kalman_predict", &kalman_predict, py::arg("kf"), py::arg("ss"), py::arg("u"));
  m.def("kalman_gain", &kalman_gain, py::arg("kf"));
  m.def("kalman_correct", &kalman_correct, py::arg("kf"), py::arg("z"));
  m.def("controller_step", &controller_step, py::arg("controller"), py::arg("z"),
        "Predict, gain, correct, then saturated state feedback; mutates the controller.");
  m.def("synthesize", &synthesize, py::arg("reduced_model"), py::arg("loop"),
        py::arg_v("opts", SynthesisOptions(), "SynthesisOptions()"));

  // ---- closed-loop validation ----
  py::class_<DampingReport>(m, "DampingReport")
      .def_readonly("open_modes", &DampingReport::open_modes)
      .def_readonly("closed_modes", &DampingReport::closed_modes)
      .def_readonly("open_inter_area", &DampingReport::open_inter_area)
      .def_readonly("closed_inter_area", &DampingReport::closed_inter_area);

  py::class_<ClosedLoopResult>(m, "ClosedLoopResult")
      .def_readonly("sim", &ClosedLoopResult::sim)
      .def_readonly("controls", &ClosedLoopResult::controls);

  m.def("closed_loop_eigen", &closed_loop_eigen, py::arg("model"), py::arg("controllers"),
        py::arg("ts"),
        "Eigenanalysis with estimator and feedback dynamics appended.");
  m.def(
      "simulate_closed_loop",
      [](const PlantModel& model, std::vector<WacController> controllers, double ts,
         double duration, const SimulationOptions& opts) {
        return simulate_closed_loop(model, controllers, ts, duration, opts);
      },
      py::arg("model"), py::arg("controllers"), py::arg("ts"), py::arg("duration"),
      py::arg_v("opts", SimulationOptions(), "SimulationOptions()"),
      "Time-domain closed loop with saturation active; controllers step on copies.");

  // ---- pipeline ----
  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("ts", &PipelineConfig::ts)
      .def_readwrite("window_samples", &PipelineConfig::window_samples)
      .def_readwrite("stream_capacity", &PipelineConfig::stream_capacity)
      .def_readwrite("k", &PipelineConfig::k)
      .def_readwrite("nystrom_l", &PipelineConfig::nystrom_l)
      .def_readwrite("sigma", &PipelineConfig::sigma)
      .def_readwrite("squared_distance", &PipelineConfig::squared_distance)
      .def_readwrite("arx_order", &PipelineConfig::arx_order)
      .def_readwrite("ident_window", &PipelineConfig::ident_window)
      .def_readwrite("ident_tol", &PipelineConfig::ident_tol)
      .def_readwrite("ident_max_iter", &PipelineConfig::ident_max_iter)
      .def_readwrite("ident_decimate", &PipelineConfig::ident_decimate)
      .def_readwrite("probe_duration_s", &PipelineConfig::probe_duration_s)
      .def_readwrite("probe_sequential", &PipelineConfig::probe_sequential)
      .def_readwrite("probe_amplitude", &PipelineConfig::probe_amplitude)
      .def_readwrite("probe_chip_s", &PipelineConfig::probe_chip_s)
      .def_readwrite("band_lo_hz", &PipelineConfig::band_lo_hz)
      .def_readwrite("band_hi_hz", &PipelineConfig::band_hi_hz)
      .def_readwrite("reduce_threshold", &PipelineConfig::reduce_threshold)
      .def_readwrite("reject_below", &PipelineConfig::reject_below)
      .def_readwrite("rho", &PipelineConfig::rho)
      .def_readwrite("q_noise", &PipelineConfig::q_noise)
      .def_readwrite("r_noise", &PipelineConfig::r_noise)
      .def_readwrite("u_limit", &PipelineConfig::u_limit)
      .def_readwrite("trigger_threshold", &PipelineConfig::trigger_threshold)
      .def_readwrite("trigger_window_s", &PipelineConfig::trigger_window_s)
      .def_readwrite("validation_duration_s", &PipelineConfig::validation_duration_s)
      .def_readwrite("sim_noise_std", &PipelineConfig::sim_noise_std)
      .def_readwrite("seed", &PipelineConfig::seed);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("plant", &Scenario::plant)
      .def_readwrite("disturbances", &Scenario::disturbances)
      .def_readwrite("disturbance_amplitude", &Scenario::disturbance_amplitude)
      .def_readwrite("disturbance_duration", &Scenario::disturbance_duration)
      .def_readwrite("disturbance_channel", &Scenario::disturbance_channel)
      .def_readwrite("coupling_shift", &Scenario::coupling_shift)
      .def_readwrite("post_intra", &Scenario::post_intra)
      .def_readwrite("post_tie", &Scenario::post_tie)
      .def_readwrite("window_csv", &Scenario::window_csv)
      .def_readwrite("probe_csv", &Scenario::probe_csv);

  py::class_<GroupingEvent>(m, "GroupingEvent")
      .def_readonly("trigger_time", &GroupingEvent::trigger_time)
      .def_readonly("magnitude", &GroupingEvent::magnitude)
      .def_readonly("grouping", &GroupingEvent::grouping);

  py::class_<StageTiming>(m, "StageTiming")
      .def_readonly("stage", &StageTiming::stage)
      .def_readonly("seconds", &StageTiming::seconds);

  py::class_<SelectionResult>(m, "SelectionResult")
      .def_readonly("reduced", &SelectionResult::reduced)
      .def_readonly("reduced_model", &SelectionResult::reduced_model)
      .def_readonly("mode", &SelectionResult::mode)
      .def_readonly("residues", &SelectionResult::residues)
      .def_readonly("selection", &SelectionResult::selection);

  py::class_<RunReport>(m, "RunReport")
      .def_readonly("plant_name", &RunReport::plant_name)
      .def_readonly("groupings", &RunReport::groupings)
      .def_readonly("model", &RunReport::model)
      .def_readonly("reduced_model", &RunReport::reduced_model)
      .def_readonly("mode", &RunReport::mode)
      .def_readonly("residues", &RunReport::residues)
      .def_readonly("selection", &RunReport::selection)
      .def_readonly("controllers", &RunReport::controllers)
      .def_readonly("has_model", &RunReport::has_model)
      .def_readonly("has_damping", &RunReport::has_damping)
      .def_readonly("damping", &RunReport::damping)
      .def_readonly("open_settling_s", &RunReport::open_settling_s)
      .def_readonly("closed_settling_s", &RunReport::closed_settling_s)
      .def_readonly("max_control_pu", &RunReport::max_control_pu)
      .def_readonly("artifacts", &RunReport::artifacts)
      .def_readonly("timings", &RunReport::timings)
      .def("regroupings", &RunReport::regroupings);

  m.def("run_pipeline", &run_pipeline, py::arg("config"), py::arg("scenario"),
        py::arg("out_dir") = "",
        "Full online loop: stream, trigger, regroup, identify, select, "
        "synthesize, validate. Artifacts land in out_dir when given.");
  m.def("stage_cluster", &stage_cluster, py::arg("window"), py::arg("k"), py::arg("params"));
  m.def("stage_identify", &stage_identify, py::arg("experiments"), py::arg("order_k"),
        py::arg("n"), py::arg("opts"));
  m.def("stage_select", &stage_select, py::arg("model"), py::arg("grouping"),
        py::arg("band_lo_hz"), py::arg("band_hi_hz"), py::arg("reduce_threshold"),
        py::arg("reject_below"), py::arg("control_ts") = 0.0);
  m.def("stage_synthesize", &stage_synthesize, py::arg("reduced_model"),
        py::arg("selection"), py::arg("opts"));
  m.def("stage_closedloop", &stage_closedloop, py::arg("plant"), py::arg("controllers"),
        py::arg("ts"));

  // ---- json interop with the command-line artifacts ----
  m.def("report_json",
        [](const RunReport& rep, int indent) { return report_to_json(rep).dump(indent); },
        py::arg("report"), py::arg("indent") = 2);
  m.def("config_json",
        [](const PipelineConfig& c, int indent) { return config_to_json(c).dump(indent); },
        py::arg("config"), py::arg("indent") = 2);
  m.def("config_from_json",
        [](const std::string& text) { return config_from_json(Json::parse(text)); },
        py::arg("text"));
  m.def("model_json",
        [](const ArxCommonDen& mm, int indent) { return model_to_json(mm).dump(indent); },
        py::arg("model"), py::arg("indent") = 2);
  m.def("model_from_json",
        [](const std::string& text) { return model_from_json(Json::parse(text)); },
        py::arg("text"));
  m.def("grouping_json",
        [](const CoherencyGrouping& g, int indent) {
          return grouping_to_json(g).dump(indent);
        },
        py::arg("grouping"), py::arg("indent") = 2);
}
