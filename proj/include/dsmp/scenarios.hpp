#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dsmp/config.hpp"

namespace dsmp {

struct ScenarioInfo {
    std::string name;
    std::string description;
    std::string required_keys;
};

/// Alphabetically sorted registry.
const std::vector<ScenarioInfo>& scenario_registry();

// Executes the config's scenario, writing results.json, the per-scenario CSV
// files and manifest.json into the output directory. Returns the results
// document. ConfigError marks validation failures; std::runtime_error marks
// numerical ones.
nlohmann::json run_scenario(const ExperimentConfig& cfg);

}  // namespace dsmp
