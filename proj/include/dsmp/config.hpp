#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dsmp/forward.hpp"

namespace dsmp {

/// Configuration problems carry the offending key path; the CLI maps them to
/// exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
    OperatorSpec op;
    CoefficientSpec coeffs;
    TimeGrid grid;
    RegularMeasure mu_f, mu_l, mu_h;
    ControlBox box;
    double u_initial = 0.0;
    InitialHistory initial;
    int paths = 1;
    uint64_t seed = 0;
    std::string scenario;
    nlohmann::json scenario_params;  // validated by the scenario itself
    std::string output_dir = "out";
    nlohmann::json raw;  // canonical config for hashing / the manifest

    Model make_model() const { return Model(op, coeffs, grid, mu_f); }
    NoiseEnsemble make_noise(int substeps = 1) const;
    ControlProcess make_initial_control() const;
};

/// Parses and validates a config JSON document. Unknown keys are errors.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Applies `key.path=value` overrides (value parsed as JSON, else string).
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// FNV-1a hash of the canonical serialization.
uint64_t config_hash(const nlohmann::json& doc);

/// Builds a measure from its config declaration on the support [a, b].
RegularMeasure parse_measure(const nlohmann::json& decl, const std::string& key_path, double a,
                             double b, int default_density_nodes);

}  // namespace dsmp
