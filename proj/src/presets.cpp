#include <cmath>
#include <string>
#include <vector>

#include "hct/config.hpp"

namespace hct {

namespace {

using nlohmann::json;

constexpr std::uint64_t kPresetSeed = 20200622;

double theta_planned() { return std::log(7.0 / 3.0); }

// The full 2x2x3 grid (recalculation rule x pool size x stage I size) used
// by the main result tables.
json adaptive_grid(const std::string& name, double theta, double sigma, double tau,
                   bool both_recalc_rules) {
    json scenarios = json::array();
    std::vector<const char*> rules{"planned"};
    if (both_recalc_rules) rules.push_back("interim");
    for (const char* recalc : rules)
        for (int n_c : {500, 1000})
            for (int n1 : {20, 25, 30}) {
                json s;
                s["name"] = std::string(recalc) + "_nc" + std::to_string(n_c) + "_n1" +
                            std::to_string(n1);
                s["design"] = json{{"n1", n1},
                                   {"n2_max", 100 - n1},
                                   {"m_max", n_c == 500 ? 5 : 10},
                                   {"tau", tau},
                                   {"recalc", recalc}};
                s["run"] = json{{"n_controls", n_c}};
                scenarios.push_back(s);
            }
    return json{{"name", name},
                {"defaults",
                 json{{"model", json{{"theta", theta}, {"sigma", sigma}}},
                      {"run", json{{"kind", "adaptive"},
                                   {"replications", 10000},
                                   {"base_seed", kPresetSeed}}}}},
                {"scenarios", scenarios}};
}

json matching_grid() {
    json scenarios = json::array();
    for (double tau : {0.0, 0.05, 0.1})
        for (int n_c : {500, 1000})
            for (int n1 : {20, 25, 30}) {
                json s;
                s["name"] = "tau" + std::to_string(tau).substr(0, 4) + "_nc" +
                            std::to_string(n_c) + "_n1" + std::to_string(n1);
                s["design"] = json{{"n1", n1},
                                   {"n2_max", 100 - n1},
                                   {"m_max", n_c == 500 ? 5 : 10},
                                   {"tau", tau},
                                   {"recalc", "planned"}};
                s["run"] = json{{"n_controls", n_c}};
                scenarios.push_back(s);
            }
    return json{{"name", "table6"},
                {"defaults",
                 json{{"model", json{{"theta", theta_planned()}, {"sigma", 0.0}}},
                      {"run", json{{"kind", "adaptive"},
                                   {"replications", 10000},
                                   {"base_seed", kPresetSeed}}}}},
                {"scenarios", scenarios}};
}

json standard_designs() {
    json scenarios = json::array();
    for (double sigma : {0.0, 0.5, 1.0})
        for (double theta : {0.0, theta_planned()}) {
            const std::string tag = std::string(theta == 0.0 ? "null" : "alt") + "_sigma" +
                                    std::to_string(sigma).substr(0, 3);
            json model = json{{"theta", theta}, {"sigma", sigma}};
            scenarios.push_back(json{{"name", "single_arm_" + tag},
                                     {"model", model},
                                     {"run", json{{"kind", "single-arm"}}}});
            scenarios.push_back(
                json{{"name", "rct_z_" + tag},
                     {"model", model},
                     {"run", json{{"kind", "rct"}, {"rct_analysis", "z"}}}});
            scenarios.push_back(
                json{{"name", "rct_logistic_" + tag},
                     {"model", model},
                     {"run", json{{"kind", "rct"}, {"rct_analysis", "logistic"}}}});
        }
    return json{{"name", "standard_designs"},
                {"defaults",
                 json{{"run", json{{"replications", 10000}, {"base_seed", kPresetSeed}}}}},
                {"scenarios", scenarios}};
}

json estimator_study_preset() {
    json scenario;
    scenario["name"] = "estimator_base";
    scenario["design"] = json{{"n1", 25},       {"n2_min", 10},        {"n2_max", 75},
                              {"m_max", 10},    {"tau", 0.05},         {"recalc", "planned"},
                              {"theta_stop", "-inf"}};
    scenario["run"] = json{{"kind", "adaptive"},
                           {"n_controls", 1000},
                           {"replications", 10000},
                           {"base_seed", kPresetSeed}};
    return json{{"name", "figure3"},
                {"theta_grid", json{{"from", -0.1}, {"to", 2.0}, {"step", 0.1}}},
                {"scenarios", json::array({scenario})}};
}

json plan_preset() {
    return json{
        {"name", "figure2"},
        {"plan", json{{"n_eff", json{{"from", 10}, {"to", 100}, {"step", 10}}},
                      {"m", json::array({1, 2, 5, 10})},
                      {"or_stop", json::array({1.1, 1.3, 1.5})},
                      {"theta", json::array({0.0, theta_planned()})},
                      {"pi_c", 0.3},
                      {"design", json{{"n1", 20}, {"m_max", 10}}}}}};
}

} // namespace

std::vector<std::string> preset_names() {
    return {"table2",        "table3",  "table4",    "table5_sigma05",
            "table5_sigma1", "table6",  "tableA1",   "tableA2",
            "standard_designs", "figure2", "figure3"};
}

bool is_preset(const std::string& name) {
    for (const std::string& n : preset_names())
        if (n == name) return true;
    return false;
}

nlohmann::json preset_json(const std::string& name) {
    const double theta_low = std::log(7.0 / 3.0 * 0.48 / 0.52);
    const double theta_high = std::log(7.0 / 3.0 * 0.52 / 0.48);
    if (name == "table2") return adaptive_grid("table2", 0.0, 0.0, 0.05, true);
    if (name == "table3") return adaptive_grid("table3", theta_planned(), 0.0, 0.05, true);
    if (name == "table4") {
        json low = adaptive_grid("table4", theta_low, 0.0, 0.05, true);
        json high = adaptive_grid("table4", theta_high, 0.0, 0.05, true);
        json scenarios = json::array();
        for (auto& s : low["scenarios"]) {
            s["name"] = "low_" + s["name"].get<std::string>();
            s["model"] = json{{"theta", theta_low}};
            scenarios.push_back(s);
        }
        for (auto& s : high["scenarios"]) {
            s["name"] = "high_" + s["name"].get<std::string>();
            s["model"] = json{{"theta", theta_high}};
            scenarios.push_back(s);
        }
        low["scenarios"] = scenarios;
        // the defaults carry theta_low; per-scenario model blocks override it
        return low;
    }
    if (name == "table5_sigma05")
        return adaptive_grid("table5_sigma05", theta_planned(), 0.5, 0.05, true);
    if (name == "table5_sigma1")
        return adaptive_grid("table5_sigma1", theta_planned(), 1.0, 0.05, true);
    if (name == "table6") return matching_grid();
    if (name == "tableA1") return adaptive_grid("tableA1", 0.0, 0.5, 0.05, true);
    if (name == "tableA2") return adaptive_grid("tableA2", 0.0, 1.0, 0.05, true);
    if (name == "standard_designs") return standard_designs();
    if (name == "figure2") return plan_preset();
    if (name == "figure3") return estimator_study_preset();
    throw ConfigError("unknown preset '" + name + "'");
}

} // namespace hct
