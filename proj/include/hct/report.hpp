#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "hct/config.hpp"
#include "hct/harness.hpp"

namespace hct {

// Full-precision numeric formatting (17 significant digits) so that CSV
// output is byte-stable across reruns.
std::string format_g17(double v);

struct ScenarioReport {
    ScenarioConfig config;
    AggregateStats stats;
};

// results.csv, schema v1: one row per scenario, fixed column order (see
// README). Returns the file content.
std::string results_csv(const std::vector<ScenarioReport>& rows);

// estimators.csv: one row per theta grid point.
std::string estimators_csv(const std::vector<EstimatorStudyRow>& rows, long replications);

// plan.csv / cp.csv for the analytic planning grid.
std::string plan_csv(const std::vector<FutilityRow>& rows);

struct CpRow {
    double theta_stop;
    int m;
    double se_plan;
    double p_continue_plan;
    double cp;
};
std::vector<CpRow> cp_rows(const PlanSpec& plan);
std::string cp_csv(const std::vector<CpRow>& rows);

// Reproduction manifest accompanying every output directory.
nlohmann::json make_manifest(const std::string& subcommand, const ResolvedConfig& cfg,
                             int threads, const std::vector<std::string>& outputs,
                             double wall_clock_seconds);

void write_file(const std::string& path, const std::string& content);

} // namespace hct
