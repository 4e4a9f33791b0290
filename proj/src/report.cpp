#include "hct/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "hct/version.hpp"

namespace hct {

std::string format_g17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

std::string num(double v) { return format_g17(v); }
std::string num(long v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }

} // namespace

std::string results_csv(const std::vector<ScenarioReport>& rows) {
    std::string out = join(
        {"scenario",        "kind",           "analysis",        "theta",
         "sigma",           "n_c",            "n1",              "n2_min",
         "n2_max",          "tau",            "m_max",           "recalc",
         "alpha",           "replications",   "base_seed",       "reject_rate",
         "reject_mc_se",    "stop_rate",      "stop_mc_se",      "approx_p_stop",
         "expected_total_n", "expected_m",    "expected_mr1",    "expected_mr2",
         "expected_mr2_hat", "mean_pi_t",     "mean_pi_c",       "bias_ml",
         "bias_fwml",       "bias_awml",      "rmse_ml",         "rmse_fwml",
         "rmse_awml",       "ci_coverage",    "separation_count", "stage1_abort_count",
         "degenerate_count", "fault_count"});
    for (const ScenarioReport& r : rows) {
        const ScenarioConfig& c = r.config;
        const AggregateStats& a = r.stats;
        out += join({c.name,
                     to_string(c.kind),
                     c.kind == DesignKind::rct ? to_string(c.rct_analysis)
                                               : to_string(c.analysis),
                     num(c.model.theta),
                     num(c.model.sigma),
                     num(c.n_controls),
                     num(c.design.n1),
                     num(c.design.n2_min),
                     num(c.design.n2_max),
                     num(c.design.tau),
                     num(c.design.m_max),
                     to_string(c.design.recalc),
                     num(c.kind == DesignKind::rct ? c.rct_alpha : c.design.alpha),
                     num(c.replications),
                     std::to_string(c.base_seed),
                     num(a.reject_rate),
                     num(a.reject_se),
                     num(a.stop_rate),
                     num(a.stop_se),
                     num(a.approx_p_stop),
                     num(a.expected_total_n),
                     num(a.expected_m),
                     num(a.expected_mr1),
                     num(a.expected_mr2),
                     num(a.expected_mr2_hat),
                     num(a.mean_pi_t),
                     num(a.mean_pi_c),
                     num(a.bias_ml),
                     num(a.bias_fwml),
                     num(a.bias_awml),
                     num(a.rmse_ml),
                     num(a.rmse_fwml),
                     num(a.rmse_awml),
                     num(a.ci_coverage),
                     num(a.separation_count),
                     num(a.stage1_abort_count),
                     num(a.degenerate_count),
                     num(a.fault_count)});
    }
    return out;
}

std::string estimators_csv(const std::vector<EstimatorStudyRow>& rows, long replications) {
    std::string out =
        join({"theta", "replications", "bias_ml", "bias_fwml", "bias_awml", "rmse_ml",
              "rmse_fwml", "rmse_awml", "ci_coverage", "expected_total_n",
              "separation_count"});
    for (const EstimatorStudyRow& r : rows) {
        out += join({num(r.theta), num(replications), num(r.stats.bias_ml),
                     num(r.stats.bias_fwml), num(r.stats.bias_awml), num(r.stats.rmse_ml),
                     num(r.stats.rmse_fwml), num(r.stats.rmse_awml),
                     num(r.stats.ci_coverage), num(r.stats.expected_total_n),
                     num(r.stats.separation_count)});
    }
    return out;
}

std::string plan_csv(const std::vector<FutilityRow>& rows) {
    std::string out = join({"n_eff", "m", "theta_stop", "theta", "pi_t", "pi_c",
                            "se_approx", "p_stop", "p_continue"});
    for (const FutilityRow& r : rows) {
        out += join({num(r.n_eff), num(r.m), num(r.theta_stop), num(r.theta), num(r.pi_t),
                     num(r.pi_c), num(r.se), num(r.p_stop), num(r.p_continue)});
    }
    return out;
}

std::vector<CpRow> cp_rows(const PlanSpec& plan) {
    std::vector<CpRow> rows;
    for (double ts : plan.theta_stop) {
        DesignParams d = plan.design;
        d.theta_stop = ts;
        const double pi_t = pi_t_planned(d);
        for (int m = 1; m <= d.m_max; ++m) {
            CpRow row;
            row.theta_stop = ts;
            row.m = m;
            row.se_plan = approx_se_stage1(d.n1, m, pi_t, d.pi_c_plan);
            row.p_continue_plan =
                futility_probability(d.theta_plan, ts, row.se_plan).p_continue;
            row.cp = conditional_power_target(d.beta, row.p_continue_plan, d.cp_cap);
            rows.push_back(row);
        }
    }
    return rows;
}

std::string cp_csv(const std::vector<CpRow>& rows) {
    std::string out = join({"theta_stop", "m", "se_plan", "p_continue_plan", "cp"});
    for (const CpRow& r : rows)
        out += join({num(r.theta_stop), num(r.m), num(r.se_plan), num(r.p_continue_plan),
                     num(r.cp)});
    return out;
}

nlohmann::json make_manifest(const std::string& subcommand, const ResolvedConfig& cfg,
                             int threads, const std::vector<std::string>& outputs,
                             double wall_clock_seconds) {
    nlohmann::json j;
    j["tool"] = "hctsim";
    j["version"] = kVersion;
    j["csv_schema_version"] = 1;
    j["subcommand"] = subcommand;
    j["threads"] = threads;
    j["outputs"] = outputs;
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["resolved_config"] = config_echo(cfg);
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace hct
