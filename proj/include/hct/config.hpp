#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hct/harness.hpp"

namespace hct {

// Invalid or unparseable configuration; the message names the offending
// file/preset and field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Planning grid for the analytic futility tables (the `plan` subcommand).
struct PlanSpec {
    bool present = false;
    std::vector<double> n_eff;
    std::vector<double> m;
    std::vector<double> theta_stop;
    std::vector<double> theta;  // pi_t per theta derives from pi_c
    double pi_c = 0.3;
    DesignParams design;  // drives the conditional-power table
};

struct ResolvedConfig {
    std::string name;
    std::vector<ScenarioConfig> scenarios;
    std::vector<double> theta_grid;  // estimator-study grid, empty otherwise
    PlanSpec plan;
};

const char* to_string(DesignKind k);
const char* to_string(OutcomeAnalysis a);
const char* to_string(RctAnalysis a);
const char* to_string(RecalcMode m);
const char* to_string(Mr2Mode m);
const char* to_string(MlWeightMode m);

std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
nlohmann::json preset_json(const std::string& name);

// Accepts a JSON file path or a built-in preset name.
ResolvedConfig load_config(const std::string& path_or_preset);

ResolvedConfig parse_config(const nlohmann::json& j, const std::string& origin);

// Fully explicit echo of a resolved configuration. Parsing the echo yields
// the same resolved scenarios again.
nlohmann::json config_echo(const ResolvedConfig& cfg);

} // namespace hct
