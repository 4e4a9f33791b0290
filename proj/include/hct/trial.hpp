#pragma once

#include <limits>
#include <vector>

#include "hct/design.hpp"
#include "hct/estimators.hpp"
#include "hct/matching.hpp"
#include "hct/patient.hpp"
#include "hct/stats.hpp"

namespace hct {

// Stage-wise effect estimation: adjusted logistic regression (default) or
// the stratified Cochran-Mantel-Haenszel test over matched sets.
enum class OutcomeAnalysis { logistic, cmh };

// Per-design constants that are fixed before any patient is enrolled,
// including the conditional power looked up by the interim M.
struct TrialContext {
    DesignParams design;
    OutcomeAnalysis analysis = OutcomeAnalysis::logistic;
    MlWeightMode ml_weights = MlWeightMode::normalized;
    std::vector<double> cp_by_m;
};

TrialContext make_trial_context(const DesignParams& d,
                                OutcomeAnalysis analysis = OutcomeAnalysis::logistic,
                                MlWeightMode ml_weights = MlWeightMode::normalized);

enum class Stage1Abort {
    none,
    no_matches,  // not a single intervention patient found M partners
    fit_failed   // stage I model unusable (separation/degenerate response)
};

struct TrialOutcome {
    bool rejected = false;
    bool stopped_at_interim = false;
    int total_n = 0;  // intervention patients enrolled (n1, or n1 + n2_final)

    double p1 = std::numeric_limits<double>::quiet_NaN();
    double p2 = std::numeric_limits<double>::quiet_NaN();
    double p_total = std::numeric_limits<double>::quiet_NaN();

    int m = 0;
    double mr1 = std::numeric_limits<double>::quiet_NaN();
    double mr2 = std::numeric_limits<double>::quiet_NaN();
    double mr2_hat = std::numeric_limits<double>::quiet_NaN();

    double theta1 = std::numeric_limits<double>::quiet_NaN();
    double se1 = std::numeric_limits<double>::quiet_NaN();
    double theta2 = std::numeric_limits<double>::quiet_NaN();
    double se2 = std::numeric_limits<double>::quiet_NaN();

    double cp_used = std::numeric_limits<double>::quiet_NaN();
    double n2_star = std::numeric_limits<double>::quiet_NaN();
    int n2_final = 0;

    double theta_ml = std::numeric_limits<double>::quiet_NaN();
    double theta_fwml = std::numeric_limits<double>::quiet_NaN();
    double theta_awml = std::numeric_limits<double>::quiet_NaN();
    double ci_lower = std::numeric_limits<double>::quiet_NaN();

    bool separation_stage2 = false;  // stage II data ignored for test/estimation
    Stage1Abort stage1_abort = Stage1Abort::none;
};

// Optional capture of matching internals (test instrumentation).
struct TrialTrace {
    std::vector<int> stage1_matched_controls;
    std::vector<int> stage2_matched_controls;
    std::vector<int> stage1_unmatched;
    std::vector<int> stage2_candidate_ids;
};

// One complete run of the adaptive two-stage design against the given
// historical control pool. Consumes draws from s for the intervention
// patients only; the pool is the caller's.
TrialOutcome run_adaptive_trial(RngStream& s, const OutcomeModel& model,
                                const TrialContext& ctx,
                                const std::vector<Patient>& pool,
                                TrialTrace* trace = nullptr);

struct SingleArmResult {
    bool rejected = false;
    double pi_t_hat = 0.0;
};

// Classic single-arm comparator: approximate binomial test of H0: pi <= p0.
SingleArmResult run_single_arm(RngStream& s, const OutcomeModel& model, int n,
                               double p0, double alpha);

enum class RctAnalysis { z_test, adjusted_logistic, cmh };

struct RctResult {
    bool rejected = false;
    double pi_t_hat = 0.0;
    double pi_c_hat = 0.0;
    bool degenerate = false;  // analysis not computable, counted as accept
};

// Randomized comparator with deterministic 1:1 allocation.
RctResult run_rct(RngStream& s, const OutcomeModel& model, int n_per_arm, double alpha,
                  RctAnalysis analysis);

struct CmhResult {
    double statistic = 0.0;    // CMH chi-square (1 df), no continuity correction
    double p_one_sided = 1.0;  // via the signed square root
    double common_or = std::numeric_limits<double>::quiet_NaN();
    double log_or_se = std::numeric_limits<double>::quiet_NaN();  // RBG variance
};

// Stratified Cochran-Mantel-Haenszel test with the Mantel-Haenszel common
// odds ratio. Strata without information (zero margin) are skipped; throws
// std::invalid_argument if nothing remains.
CmhResult cmh_test(const std::vector<TwoByTwoTable>& strata);

struct OneStageResult {
    bool rejected = false;
    double p_value = std::numeric_limits<double>::quiet_NaN();
    int m = 0;
    double mr = 0.0;
    bool infeasible = false;
};

// Hypothetical fixed design: one stage of n patients with the same matching
// algorithm and outcome model, no interim.
OneStageResult run_one_stage(RngStream& s, const OutcomeModel& model,
                             const DesignParams& d, int n,
                             const std::vector<Patient>& pool);

} // namespace hct
