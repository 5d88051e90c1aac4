#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "wadc/json_io.hpp"
#include "wadc/pipeline.hpp"

using namespace wadc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<MachineId>> group_list(const CoherencyGrouping& g) {
  std::vector<std::vector<MachineId>> out;
  for (const auto& [gid, ids] : g.groups()) out.push_back(ids);
  return out;
}

/// One shared default-scenario run; several cases below inspect it.
const RunReport& default_run() {
  static const RunReport rep = [] {
    fs::remove_all("pipe_default");
    return run_pipeline(PipelineConfig{}, Scenario{}, "pipe_default");
  }();
  return rep;
}

}  // namespace

TEST_CASE("default two-area run: one grouping, identified mode, working loop") {
  const RunReport& rep = default_run();
  REQUIRE(rep.regroupings() == 1);
  CHECK(rep.groupings[0].trigger_time > 0.0);
  auto groups = group_list(rep.groupings[0].grouping);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0] == std::vector<MachineId>{1, 2});
  CHECK(groups[1] == std::vector<MachineId>{3, 4});

  REQUIRE(rep.has_model);
  CHECK(rep.model.stable);
  CHECK(rep.mode.frequency == doctest::Approx(0.60).epsilon(0.05));
  CHECK(rep.mode.damping_ratio < 0.05);

  REQUIRE(rep.selection.loops.size() == 2);
  for (const auto& loop : rep.selection.loops) {
    // argmax loops live inside their own coherent group
    const auto& assign = rep.groupings[0].grouping.assignment;
    CHECK(assign[loop.output - 1] == loop.group);
    CHECK(assign[loop.input - 1] == loop.group);
  }

  REQUIRE(rep.has_damping);
  CHECK(rep.damping.closed_inter_area.zeta > rep.damping.open_inter_area.zeta);
  CHECK(rep.max_control_pu <= 0.05 + 1e-12);
  CHECK(rep.closed_settling_s < rep.open_settling_s);
}

TEST_CASE("artifacts include the report, timings, and stage csv files") {
  const RunReport& rep = default_run();
  CHECK(fs::exists("pipe_default/report.json"));
  CHECK(fs::exists("pipe_default/timings.json"));
  for (const auto& rel : rep.artifacts) CHECK(fs::exists(fs::path("pipe_default") / rel));
}

TEST_CASE("fixed seed reproduces the report byte for byte") {
  default_run();
  fs::remove_all("pipe_repeat");
  run_pipeline(PipelineConfig{}, Scenario{}, "pipe_repeat");
  CHECK(slurp("pipe_default/report.json") == slurp("pipe_repeat/report.json"));
}

TEST_CASE("quiet scenario yields only the baseline grouping and no model") {
  Scenario quiet;
  quiet.disturbances = 0;
  const RunReport rep = run_pipeline(PipelineConfig{}, quiet, "");
  REQUIRE(rep.regroupings() == 1);
  CHECK(rep.groupings[0].trigger_time < 0.0);  // baseline pass, not a trigger
  CHECK(!rep.has_model);
  CHECK(!rep.has_damping);
}

TEST_CASE("coupling shift forces a second, different grouping") {
  Scenario s;
  s.disturbances = 2;
  s.coupling_shift = true;
  const RunReport rep = run_pipeline(PipelineConfig{}, s, "");
  REQUIRE(rep.regroupings() == 2);
  CHECK(rep.groupings[0].trigger_time > 0.0);
  CHECK(rep.groupings[1].trigger_time > rep.groupings[0].trigger_time);
  CHECK(group_list(rep.groupings[0].grouping) != group_list(rep.groupings[1].grouping));
}

TEST_CASE("ten-machine scenario recovers the four designed blocks") {
  PipelineConfig c;
  c.k = 4;
  Scenario s;
  s.plant = "tenmachine";
  s.disturbance_channel = 9;
  const RunReport rep = run_pipeline(c, s, "");
  REQUIRE(rep.regroupings() == 1);
  auto groups = group_list(rep.groupings[0].grouping);
  REQUIRE(groups.size() == 4);
  CHECK(groups[0] == std::vector<MachineId>{1, 8});
  CHECK(groups[1] == std::vector<MachineId>{2, 3});
  CHECK(groups[2] == std::vector<MachineId>{4, 5, 6, 7, 9});
  CHECK(groups[3] == std::vector<MachineId>{10});
  CHECK(rep.selection.loops.size() + rep.selection.rejected.size() == 4);
}

TEST_CASE("csv-fed run reproduces the in-memory grouping and mode") {
  const RunReport& live = default_run();
  // replay the probe experiment the default run wrote to disk: measured
  // outputs feed the record input, injected signals feed the probe input
  std::string window_rel, probe_rel;
  for (const auto& rel : live.artifacts) {
    if (rel.rfind("probe_window", 0) == 0) window_rel = rel;
    if (rel.rfind("probe_inputs", 0) == 0) probe_rel = rel;
  }
  REQUIRE(!window_rel.empty());
  REQUIRE(!probe_rel.empty());

  Scenario replay;
  replay.window_csv = (fs::path("pipe_default") / window_rel).string();
  replay.probe_csv = (fs::path("pipe_default") / probe_rel).string();
  const RunReport rep = run_pipeline(PipelineConfig{}, replay, "");
  REQUIRE(rep.regroupings() >= 1);
  CHECK(group_list(rep.groupings.back().grouping) ==
        group_list(live.groupings.back().grouping));
  REQUIRE(rep.has_model);
  CHECK(rep.mode.frequency == doctest::Approx(live.mode.frequency).epsilon(1e-6));
  CHECK(rep.mode.damping_ratio == doctest::Approx(live.mode.damping_ratio).epsilon(1e-4));
  REQUIRE(rep.selection.loops.size() == live.selection.loops.size());
  for (size_t i = 0; i < rep.selection.loops.size(); ++i) {
    CHECK(rep.selection.loops[i].output == live.selection.loops[i].output);
    CHECK(rep.selection.loops[i].input == live.selection.loops[i].input);
  }
}

TEST_CASE("config json round-trips every field") {
  PipelineConfig c;
  c.k = 4;
  c.arx_order = 9;
  c.rho = 0.125;
  c.ident_decimate = 3;
  c.probe_duration_s = 12.5;
  c.seed = 77;
  const Json j = config_to_json(c);
  const PipelineConfig back = config_from_json(j);
  CHECK(back.k == c.k);
  CHECK(back.arx_order == c.arx_order);
  CHECK(back.rho == doctest::Approx(c.rho));
  CHECK(back.ident_decimate == c.ident_decimate);
  CHECK(back.probe_duration_s == doctest::Approx(c.probe_duration_s));
  CHECK(back.seed == c.seed);
  // defaulting: an empty object reproduces the defaults
  const PipelineConfig fresh = config_from_json(Json::object());
  CHECK(fresh.k == PipelineConfig{}.k);
  CHECK(fresh.rho == doctest::Approx(PipelineConfig{}.rho));
}
