#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "wadc/pipeline.hpp"

namespace wadc {

/// Insertion-ordered JSON keeps every emitted document's key order fixed,
/// which makes reports byte-reproducible.
using Json = nlohmann::ordered_json;

Json grouping_to_json(const CoherencyGrouping& g);
CoherencyGrouping grouping_from_json(const Json& j);

Json model_to_json(const ArxCommonDen& m);
ArxCommonDen model_from_json(const Json& j);

Json selection_to_json(const ControlLoopSelection& sel, const ResidueMatrix& rm);
void selection_from_json(const Json& j, ControlLoopSelection& sel, ResidueMatrix& rm);

Json controllers_to_json(const std::vector<WacController>& cs);
std::vector<WacController> controllers_from_json(const Json& j);

Json damping_to_json(const DampingReport& rep);

Json config_to_json(const PipelineConfig& c);
PipelineConfig config_from_json(const Json& j);

Json report_to_json(const RunReport& rep);
Json timings_to_json(const RunReport& rep);

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

}  // namespace wadc
