#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hct/config.hpp"
#include "hct/report.hpp"
#include "hct/version.hpp"

namespace {

using namespace hct;

struct CommonFlags {
    std::string config;
    std::string output_dir = ".";
    int threads = 0;
    long replications = -1;       // -1: keep config value
    long long base_seed = -1;     // -1: keep config value
    bool paper_scale = false;     // 100,000 replications unless --replications given
};

void apply_overrides(ResolvedConfig& cfg, const CommonFlags& f) {
    for (ScenarioConfig& s : cfg.scenarios) {
        if (f.replications > 0)
            s.replications = f.replications;
        else if (f.paper_scale)
            s.replications = 100000;
        if (f.base_seed >= 0) s.base_seed = static_cast<std::uint64_t>(f.base_seed);
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_simulate(const CommonFlags& flags) {
    ResolvedConfig cfg = load_config(flags.config);
    if (cfg.scenarios.empty())
        throw ConfigError(flags.config + ": config has no scenarios to simulate");
    apply_overrides(cfg, flags);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ScenarioReport> reports;
    reports.reserve(cfg.scenarios.size());
    for (const ScenarioConfig& s : cfg.scenarios) {
        ScenarioReport rep{s, run_scenario(s, flags.threads)};
        std::printf("%s/%s: reject=%.4f stop=%.4f E[n]=%.2f E[M]=%.2f mr1=%.4f\n",
                    cfg.name.c_str(), s.name.c_str(), rep.stats.reject_rate,
                    rep.stats.stop_rate, rep.stats.expected_total_n, rep.stats.expected_m,
                    rep.stats.expected_mr1);
        std::fflush(stdout);
        reports.push_back(std::move(rep));
    }

    std::filesystem::create_directories(flags.output_dir);
    const std::string csv_path = flags.output_dir + "/results.csv";
    write_file(csv_path, results_csv(reports));
    write_file(flags.output_dir + "/manifest.json",
               make_manifest("simulate", cfg, flags.threads, {"results.csv"},
                             seconds_since(t0))
                   .dump(2) +
                   "\n");
    std::printf("wrote %s\n", csv_path.c_str());
    return 0;
}

int cmd_estimators(const CommonFlags& flags) {
    ResolvedConfig cfg = load_config(flags.config);
    if (cfg.theta_grid.empty())
        throw ConfigError(flags.config + ": theta_grid: estimator study needs a grid");
    if (cfg.scenarios.size() != 1)
        throw ConfigError(flags.config +
                          ": estimator study needs exactly one base scenario");
    apply_overrides(cfg, flags);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<EstimatorStudyRow> rows;
    try {
        rows = estimator_study(cfg.scenarios[0], cfg.theta_grid, flags.threads);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(flags.config + ": " + e.what());
    }
    for (const EstimatorStudyRow& r : rows)
        std::printf("theta=%.2f: bias(ml,fwml,awml)=(%.4f,%.4f,%.4f) coverage=%.4f\n",
                    r.theta, r.stats.bias_ml, r.stats.bias_fwml, r.stats.bias_awml,
                    r.stats.ci_coverage);

    std::filesystem::create_directories(flags.output_dir);
    write_file(flags.output_dir + "/estimators.csv",
               estimators_csv(rows, cfg.scenarios[0].replications));
    write_file(flags.output_dir + "/manifest.json",
               make_manifest("estimators", cfg, flags.threads, {"estimators.csv"},
                             seconds_since(t0))
                   .dump(2) +
                   "\n");
    std::printf("wrote %s/estimators.csv\n", flags.output_dir.c_str());
    return 0;
}

struct PlanFlags {
    std::vector<double> n_eff, m, or_stop, theta;
    double pi_c = -1.0;
    int n1 = -1, m_max = -1;
    double alpha = -1.0, beta = -1.0;
};

int cmd_plan(const CommonFlags& flags, const PlanFlags& pf) {
    ResolvedConfig cfg =
        load_config(flags.config.empty() ? std::string("figure2") : flags.config);
    if (!cfg.plan.present)
        throw ConfigError(flags.config + ": config has no plan section");
    PlanSpec plan = cfg.plan;
    if (!pf.n_eff.empty()) plan.n_eff = pf.n_eff;
    if (!pf.m.empty()) plan.m = pf.m;
    if (!pf.or_stop.empty()) {
        plan.theta_stop.clear();
        for (double x : pf.or_stop) {
            if (!(x > 0)) throw ConfigError("--or-stop: odds ratios must be positive");
            plan.theta_stop.push_back(std::log(x));
        }
    }
    if (!pf.theta.empty()) plan.theta = pf.theta;
    if (pf.pi_c > 0) plan.pi_c = pf.pi_c;
    if (pf.n1 > 0) plan.design.n1 = pf.n1;
    if (pf.m_max > 0) plan.design.m_max = pf.m_max;
    if (pf.alpha > 0) plan.design.alpha = pf.alpha;
    if (pf.beta > 0) plan.design.beta = pf.beta;
    cfg.plan = plan;

    std::vector<HypothesisPoint> hypotheses;
    for (double th : plan.theta)
        hypotheses.push_back({th, expit(logit(plan.pi_c) + th)});

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<FutilityRow> grid;
    try {
        grid = futility_table(plan.n_eff, plan.m, plan.theta_stop, hypotheses, plan.pi_c);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("plan grid: ") + e.what());
    }
    std::filesystem::create_directories(flags.output_dir);
    write_file(flags.output_dir + "/plan.csv", plan_csv(grid));
    write_file(flags.output_dir + "/cp.csv", cp_csv(cp_rows(plan)));
    write_file(flags.output_dir + "/manifest.json",
               make_manifest("plan", cfg, flags.threads, {"plan.csv", "cp.csv"},
                             seconds_since(t0))
                   .dump(2) +
                   "\n");
    std::printf("wrote %s/plan.csv (%zu rows) and %s/cp.csv\n", flags.output_dir.c_str(),
                grid.size(), flags.output_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hctsim: two-stage single-arm trials augmented with matched historical "
                 "controls (simulation and planning)"};
    app.set_version_flag("--version", hct::kVersion);
    app.require_subcommand(1);

    CommonFlags flags;
    PlanFlags plan_flags;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", flags.config,
                                    "config file or preset name (e.g. table2)");
        if (config_required) opt->required();
        sub->add_option("--output-dir", flags.output_dir, "output directory");
        sub->add_option("--threads", flags.threads, "worker threads (0 = hardware)");
        sub->add_option("--replications", flags.replications,
                        "override replications for every scenario");
        sub->add_option("--base-seed", flags.base_seed, "override the base seed");
        sub->add_flag("--paper-scale", flags.paper_scale,
                      "run 100,000 replications per scenario");
    };

    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo operating characteristics");
    add_common(sim, true);
    CLI::App* est =
        app.add_subcommand("estimators", "bias/RMSE/coverage across a theta grid");
    add_common(est, true);
    CLI::App* plan =
        app.add_subcommand("plan", "analytic futility and conditional-power tables");
    add_common(plan, false);
    plan->add_option("--n-eff", plan_flags.n_eff, "effective stage I sizes")->delimiter(',');
    plan->add_option("--m", plan_flags.m, "numbers of matching partners")->delimiter(',');
    plan->add_option("--or-stop", plan_flags.or_stop, "futility thresholds (odds ratio scale)")
        ->delimiter(',');
    plan->add_option("--theta", plan_flags.theta, "true log odds ratios")->delimiter(',');
    plan->add_option("--pi-c", plan_flags.pi_c, "control response rate");
    plan->add_option("--n1", plan_flags.n1, "planned stage I size (cp table)");
    plan->add_option("--m-max", plan_flags.m_max, "maximum M (cp table)");
    plan->add_option("--alpha", plan_flags.alpha, "one-sided significance level");
    plan->add_option("--beta", plan_flags.beta, "type II error target");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(flags);
        if (est->parsed()) return cmd_estimators(flags);
        if (plan->parsed()) return cmd_plan(flags, plan_flags);
    } catch (const hct::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
