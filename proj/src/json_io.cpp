#include "wadc/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace wadc {

namespace {

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json rowvec_json(const Eigen::RowVectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json mat_json(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

Eigen::VectorXd json_vec(const Json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd json_mat(const Json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = j[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
  return m;
}

Json mode_json(const ModeDescriptor& m) {
  return Json{{"hz", m.frequency}, {"zeta", m.damping_ratio}};
}

Json plant_modes_json(const std::vector<PlantMode>& modes) {
  Json a = Json::array();
  for (const auto& m : modes) a.push_back(Json{{"hz", m.hz}, {"zeta", m.zeta}});
  return a;
}

}  // namespace

Json grouping_to_json(const CoherencyGrouping& g) {
  Json j;
  j["k"] = g.k;
  Json groups = Json::object();
  for (const auto& [gid, machines] : g.groups()) groups[std::to_string(gid)] = machines;
  j["groups"] = groups;
  j["eigenvalues"] = vec_json(g.eigenvalues);
  j["elapsed_s"] = g.elapsed;
  j["sigma"] = g.sigma;
  j["l"] = g.l;
  j["seed"] = g.seed;
  j["suggested_k"] = g.suggested_k;
  j["inertia"] = g.inertia;
  return j;
}

CoherencyGrouping grouping_from_json(const Json& j) {
  CoherencyGrouping g;
  g.k = j.at("k").get<int>();
  int n = 0;
  for (const auto& [gid, machines] : j.at("groups").items())
    for (const auto& m : machines) n = std::max(n, m.get<int>());
  g.assignment.assign(n, 0);
  for (const auto& [gid, machines] : j.at("groups").items())
    for (const auto& m : machines) g.assignment[m.get<int>() - 1] = std::stoi(gid);
  g.eigenvalues = json_vec(j.at("eigenvalues"));
  g.elapsed = j.at("elapsed_s").get<double>();
  g.sigma = j.at("sigma").get<double>();
  g.l = j.at("l").get<int>();
  g.seed = j.at("seed").get<std::uint64_t>();
  g.suggested_k = j.value("suggested_k", 1);
  g.inertia = j.value("inertia", 0.0);
  return g;
}

Json model_to_json(const ArxCommonDen& m) {
  Json j;
  j["order"] = m.order_k;
  j["ts"] = m.ts;
  j["den"] = vec_json(m.den);
  Json num = Json::object();
  for (size_t h = 0; h < m.pairs.size(); ++h)
    num[std::to_string(m.pairs[h].first) + "," + std::to_string(m.pairs[h].second)] =
        vec_json(m.num[h]);
  j["num"] = num;
  j["fit"] = m.fit;
  j["iterations"] = m.iterations;
  j["stable"] = m.stable;
  j["converged"] = m.converged;
  return j;
}

ArxCommonDen model_from_json(const Json& j) {
  ArxCommonDen m;
  m.order_k = j.at("order").get<int>();
  m.ts = j.at("ts").get<double>();
  m.den = json_vec(j.at("den"));
  for (const auto& [key, coeffs] : j.at("num").items()) {
    const auto comma = key.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("model JSON: numerator key must be \"m,p\"");
    m.pairs.emplace_back(std::stoi(key.substr(0, comma)), std::stoi(key.substr(comma + 1)));
    m.num.push_back(json_vec(coeffs));
  }
  m.fit = j.at("fit").get<double>();
  m.iterations = j.at("iterations").get<int>();
  m.stable = j.at("stable").get<bool>();
  m.converged = j.value("converged", true);
  return m;
}

Json selection_to_json(const ControlLoopSelection& sel, const ResidueMatrix& rm) {
  Json j;
  j["mode"] = mode_json(rm.mode);
  j["residue_matrix"] = mat_json(rm.values);
  j["outputs"] = rm.outputs;
  j["inputs"] = rm.inputs;
  Json loops = Json::array();
  for (const auto& l : sel.loops)
    loops.push_back(Json{{"group", l.group},
                         {"output", l.output},
                         {"input", l.input},
                         {"residue", l.residue}});
  j["loops"] = loops;
  Json rejected = Json::array();
  for (const auto& l : sel.rejected)
    rejected.push_back(Json{{"group", l.group},
                            {"output", l.output},
                            {"input", l.input},
                            {"residue", l.residue}});
  j["rejected"] = rejected;
  return j;
}

void selection_from_json(const Json& j, ControlLoopSelection& sel, ResidueMatrix& rm) {
  rm.mode.frequency = j.at("mode").at("hz").get<double>();
  rm.mode.damping_ratio = j.at("mode").at("zeta").get<double>();
  rm.values = json_mat(j.at("residue_matrix"));
  rm.outputs = j.value("outputs", std::vector<MachineId>{});
  rm.inputs = j.value("inputs", std::vector<MachineId>{});
  sel = ControlLoopSelection{};
  for (const auto& l : j.at("loops"))
    sel.loops.push_back(SelectedLoop{l.at("group").get<int>(), l.at("output").get<int>(),
                                     l.at("input").get<int>(), l.at("residue").get<double>()});
  for (const auto& l : j.at("rejected"))
    sel.rejected.push_back(SelectedLoop{l.at("group").get<int>(), l.at("output").get<int>(),
                                        l.at("input").get<int>(),
                                        l.at("residue").get<double>()});
}

Json controllers_to_json(const std::vector<WacController>& cs) {
  Json arr = Json::array();
  for (const auto& c : cs) {
    Json j;
    j["group"] = c.loop.group;
    j["order"] = c.ss.order();
    j["K"] = rowvec_json(c.lqr.gain);
    j["P"] = mat_json(c.lqr.riccati);
    j["rho"] = c.lqr.rho;
    j["u_limit"] = c.u_limit;
    j["kf"] = Json{{"Q", mat_json(c.kf.q_noise)},
                   {"R", c.kf.r_noise},
                   {"H", rowvec_json(c.kf.h)}};
    j["loop"] = Json{{"output", c.loop.output},
                     {"input", c.loop.input},
                     {"residue", c.loop.residue}};
    j["ss"] = Json{{"A", mat_json(c.ss.a)},
                   {"B", mat_json(c.ss.b)},
                   {"C", mat_json(c.ss.c)},
                   {"ts", c.ss.ts}};
    arr.push_back(j);
  }
  return arr;
}

std::vector<WacController> controllers_from_json(const Json& j) {
  std::vector<WacController> cs;
  for (const auto& e : j) {
    WacController c;
    c.loop.group = e.at("group").get<int>();
    c.loop.output = e.at("loop").at("output").get<int>();
    c.loop.input = e.at("loop").at("input").get<int>();
    c.loop.residue = e.at("loop").value("residue", 0.0);
    c.ss.a = json_mat(e.at("ss").at("A"));
    c.ss.b = json_mat(e.at("ss").at("B"));
    c.ss.c = json_mat(e.at("ss").at("C"));
    c.ss.d = Eigen::MatrixXd::Zero(1, 1);
    c.ss.ts = e.at("ss").at("ts").get<double>();
    c.lqr.gain = json_vec(e.at("K")).transpose();
    c.lqr.riccati = json_mat(e.at("P"));
    c.lqr.rho = e.at("rho").get<double>();
    c.lqr.converged = true;
    c.u_limit = e.at("u_limit").get<double>();
    c.kf.q_noise = json_mat(e.at("kf").at("Q"));
    c.kf.r_noise = e.at("kf").at("R").get<double>();
    c.kf.h = json_vec(e.at("kf").at("H")).transpose();
    c.kf.x_hat = Eigen::VectorXd::Zero(c.ss.order());
    c.kf.cov = Eigen::MatrixXd::Identity(c.ss.order(), c.ss.order());
    c.kf.gain = Eigen::VectorXd::Zero(c.ss.order());
    cs.push_back(std::move(c));
  }
  return cs;
}

Json damping_to_json(const DampingReport& rep) {
  Json j;
  j["modes"] = plant_modes_json(rep.closed_modes);
  j["open_modes"] = plant_modes_json(rep.open_modes);
  j["inter_area"] =
      Json{{"open", Json{{"hz", rep.open_inter_area.hz}, {"zeta", rep.open_inter_area.zeta}}},
           {"closed", Json{{"hz", rep.closed_inter_area.hz},
                           {"zeta", rep.closed_inter_area.zeta}}}};
  return j;
}

Json config_to_json(const PipelineConfig& c) {
  Json j;
  j["ts"] = c.ts;
  j["window_samples"] = c.window_samples;
  j["stream_capacity"] = c.stream_capacity;
  j["k"] = c.k;
  j["nystrom_l"] = c.nystrom_l;
  j["sigma"] = c.sigma;
  j["squared_distance"] = c.squared_distance;
  j["arx_order"] = c.arx_order;
  j["ident_window"] = c.ident_window;
  j["ident_tol"] = c.ident_tol;
  j["ident_max_iter"] = c.ident_max_iter;
  j["ident_decimate"] = c.ident_decimate;
  j["probe_duration_s"] = c.probe_duration_s;
  j["probe_sequential"] = c.probe_sequential;
  j["probe_amplitude"] = c.probe_amplitude;
  j["probe_chip_s"] = c.probe_chip_s;
  j["band_lo_hz"] = c.band_lo_hz;
  j["band_hi_hz"] = c.band_hi_hz;
  j["reduce_threshold"] = c.reduce_threshold;
  j["reject_below"] = c.reject_below;
  j["rho"] = c.rho;
  j["q_noise"] = c.q_noise;
  j["r_noise"] = c.r_noise;
  j["u_limit"] = c.u_limit;
  j["trigger_threshold"] = c.trigger_threshold;
  j["trigger_window_s"] = c.trigger_window_s;
  j["validation_duration_s"] = c.validation_duration_s;
  j["sim_noise_std"] = c.sim_noise_std;
  j["seed"] = c.seed;
  return j;
}

PipelineConfig config_from_json(const Json& j) {
  PipelineConfig d;  // defaults
  PipelineConfig c;
  c.ts = j.value("ts", d.ts);
  c.window_samples = j.value("window_samples", d.window_samples);
  c.stream_capacity = j.value("stream_capacity", d.stream_capacity);
  c.k = j.value("k", d.k);
  c.nystrom_l = j.value("nystrom_l", d.nystrom_l);
  c.sigma = j.value("sigma", d.sigma);
  c.squared_distance = j.value("squared_distance", d.squared_distance);
  c.arx_order = j.value("arx_order", d.arx_order);
  c.ident_window = j.value("ident_window", d.ident_window);
  c.ident_tol = j.value("ident_tol", d.ident_tol);
  c.ident_max_iter = j.value("ident_max_iter", d.ident_max_iter);
  c.ident_decimate = j.value("ident_decimate", d.ident_decimate);
  c.probe_duration_s = j.value("probe_duration_s", d.probe_duration_s);
  c.probe_sequential = j.value("probe_sequential", d.probe_sequential);
  c.probe_amplitude = j.value("probe_amplitude", d.probe_amplitude);
  c.probe_chip_s = j.value("probe_chip_s", d.probe_chip_s);
  c.band_lo_hz = j.value("band_lo_hz", d.band_lo_hz);
  c.band_hi_hz = j.value("band_hi_hz", d.band_hi_hz);
  c.reduce_threshold = j.value("reduce_threshold", d.reduce_threshold);
  c.reject_below = j.value("reject_below", d.reject_below);
  c.rho = j.value("rho", d.rho);
  c.q_noise = j.value("q_noise", d.q_noise);
  c.r_noise = j.value("r_noise", d.r_noise);
  c.u_limit = j.value("u_limit", d.u_limit);
  c.trigger_threshold = j.value("trigger_threshold", d.trigger_threshold);
  c.trigger_window_s = j.value("trigger_window_s", d.trigger_window_s);
  c.validation_duration_s = j.value("validation_duration_s", d.validation_duration_s);
  c.sim_noise_std = j.value("sim_noise_std", d.sim_noise_std);
  c.seed = j.value("seed", d.seed);
  return c;
}

Json report_to_json(const RunReport& rep) {
  Json j;
  j["plant"] = rep.plant_name;
  Json groupings = Json::array();
  for (const auto& ev : rep.groupings) {
    Json g = grouping_to_json(ev.grouping);
    g.erase("elapsed_s");  // wall time lives in the timings file
    groupings.push_back(
        Json{{"trigger_time", ev.trigger_time}, {"magnitude", ev.magnitude}, {"grouping", g}});
  }
  j["groupings"] = groupings;
  j["regroupings"] = rep.regroupings();
  if (rep.has_model) {
    Json model = model_to_json(rep.model);
    j["model"] = model;
    j["reduced_model"] = model_to_json(rep.reduced_model);
    j["selection"] = selection_to_json(rep.selection, rep.residues);
    Json ctl = controllers_to_json(rep.controllers);
    j["controllers"] = ctl;
  }
  if (rep.has_damping) {
    j["damping"] = damping_to_json(rep.damping);
    j["open_settling_s"] = rep.open_settling_s;
    j["closed_settling_s"] = rep.closed_settling_s;
    j["max_control_pu"] = rep.max_control_pu;
  }
  j["artifacts"] = rep.artifacts;
  return j;
}

Json timings_to_json(const RunReport& rep) {
  Json j = Json::array();
  for (const auto& t : rep.timings)
    j.push_back(Json{{"stage", t.stage}, {"seconds", t.seconds}});
  return j;
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
}

Json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return Json::parse(f);
}

}  // namespace wadc
