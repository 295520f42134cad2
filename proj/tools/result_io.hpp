#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fcausal/benchmark.hpp"
#include "fcausal/estimators.hpp"
#include "fcausal/factor_model.hpp"
#include "fcausal/sim.hpp"

namespace fcausal::cli {

using Json = nlohmann::ordered_json;

Json to_json(const Interval& iv);
Json to_json(const EffectEstimate& est);
Json to_json(const BiasModel& bm);
Json to_json(const RankSelection& sel);
Json to_json(const SimScenario& sc);
Json to_json(const Truth& truth);

/// Applies the keys present in `j` on top of `base`.
SimScenario scenario_from_json(const Json& j, SimScenario base);

/// Writes {"timestamp": ..., <body keys>} with two-space indentation. The
/// timestamp is the only line that differs between identical runs.
void write_document(const std::filesystem::path& path, const Json& body);
std::string render_document(const Json& body, const std::string& timestamp);
std::string utc_timestamp();

/// grid,value,lo,hi rows of the centered dose-response curve.
void write_curve_csv(const std::filesystem::path& path, const EffectEstimate& est);

Json read_json_file(const std::filesystem::path& path);

}  // namespace fcausal::cli
