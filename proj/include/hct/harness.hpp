#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hct/trial.hpp"

namespace hct {

enum class DesignKind { adaptive, single_arm, rct, one_stage };

// One fully resolved simulation scenario: data-generating model, design
// constants, and replication controls.
struct ScenarioConfig {
    std::string name = "scenario";
    DesignKind kind = DesignKind::adaptive;
    OutcomeModel model;
    DesignParams design;
    int n_controls = 500;
    long replications = 10000;
    std::uint64_t base_seed = 20240101;
    bool fixed_pool = false;  // one shared pool instead of a fresh one per replication
    OutcomeAnalysis analysis = OutcomeAnalysis::logistic;
    MlWeightMode ml_weights = MlWeightMode::normalized;

    int single_arm_n = 44;
    double single_arm_p0 = 0.3;
    int rct_n_per_arm = 50;
    double rct_alpha = 0.1;
    RctAnalysis rct_analysis = RctAnalysis::z_test;
    int one_stage_n = 50;
};

struct AggregateStats {
    long replications = 0;

    double reject_rate = 0.0;
    double reject_se = 0.0;
    double stop_rate = 0.0;
    double stop_se = 0.0;

    // Approximate stopping probability evaluated at the observed mean M and
    // stage I matching rate (the analytic column of the result tables).
    double approx_p_stop = std::numeric_limits<double>::quiet_NaN();

    double expected_total_n = std::numeric_limits<double>::quiet_NaN();
    double expected_m = std::numeric_limits<double>::quiet_NaN();
    double expected_mr1 = std::numeric_limits<double>::quiet_NaN();
    double expected_mr2 = std::numeric_limits<double>::quiet_NaN();
    // Wald lower-bound estimate applied to the mean stage I matching rate.
    double expected_mr2_hat = std::numeric_limits<double>::quiet_NaN();

    double mean_pi_t = std::numeric_limits<double>::quiet_NaN();
    double mean_pi_c = std::numeric_limits<double>::quiet_NaN();

    double bias_ml = std::numeric_limits<double>::quiet_NaN();
    double bias_fwml = std::numeric_limits<double>::quiet_NaN();
    double bias_awml = std::numeric_limits<double>::quiet_NaN();
    double rmse_ml = std::numeric_limits<double>::quiet_NaN();
    double rmse_fwml = std::numeric_limits<double>::quiet_NaN();
    double rmse_awml = std::numeric_limits<double>::quiet_NaN();
    double ci_coverage = std::numeric_limits<double>::quiet_NaN();

    long separation_count = 0;   // stage II ignored
    long stage1_abort_count = 0; // stage I infeasible (incl. one-stage design)
    long degenerate_count = 0;   // comparator analysis not computable
    long fault_count = 0;        // unexpected per-replication failures
};

// Runs cfg.replications independent trials on streams (base_seed, 0..reps-1)
// and reduces them. The reduction order is fixed by replication index, so
// the result is bit-identical for any worker count. threads <= 0 uses the
// hardware count.
AggregateStats run_scenario(const ScenarioConfig& cfg, int threads = 0);

struct EstimatorStudyRow {
    double theta;
    AggregateStats stats;
};

// Bias/RMSE/coverage across a grid of true effects with futility disabled
// (base.design.theta_stop must be -infinity); the recalculation effect per
// grid point is the true effect itself.
std::vector<EstimatorStudyRow> estimator_study(const ScenarioConfig& base,
                                               const std::vector<double>& theta_grid,
                                               int threads = 0);

struct FutilityRow {
    double n_eff;
    double m;
    double theta_stop;
    double theta;
    double pi_t;
    double pi_c;
    double se;
    double p_stop;
    double p_continue;
};

struct HypothesisPoint {
    double theta;
    double pi_t;
};

// Pure evaluation of the approximate stop/continue probabilities over a
// planning grid; consumes no randomness.
std::vector<FutilityRow> futility_table(const std::vector<double>& n_eff,
                                        const std::vector<double>& m,
                                        const std::vector<double>& theta_stop,
                                        const std::vector<HypothesisPoint>& hypotheses,
                                        double pi_c);

struct FixedNResult {
    int n = 0;
    double power = std::numeric_limits<double>::quiet_NaN();
    double mc_se = std::numeric_limits<double>::quiet_NaN();
};

// Smallest one-stage sample size reaching the target power, searched with
// common random numbers across candidates. Throws std::runtime_error when
// no n <= n_ceiling reaches the target.
FixedNResult find_fixed_n(const ScenarioConfig& base, double target_power,
                          int n_ceiling = 400, int threads = 0);

} // namespace hct
