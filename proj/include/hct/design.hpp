#pragma once

#include <cmath>
#include <numbers>
#include <vector>

namespace hct {

enum class RecalcMode { planned_effect, interim_estimate };
enum class Mr2Mode { naive, wald_lower_99 };

// All tuning constants of the adaptive design. Defaults reproduce the
// reference configuration: one-sided alpha 0.025, power 0.8, futility
// threshold log(1.3), equal combination weights.
struct DesignParams {
    double alpha = 0.025;
    double beta = 0.2;
    double theta_plan = std::log(7.0 / 3.0);
    double theta_stop = std::log(1.3);
    double theta_cross = 0.0;
    double w1 = std::numbers::sqrt2 / 2.0;
    double w2 = std::numbers::sqrt2 / 2.0;
    int n1 = 20;
    int n2_min = 10;
    int n2_max = 80;
    double tau = 0.05;
    int m_max = 5;
    RecalcMode recalc = RecalcMode::planned_effect;
    double cp_cap = 0.99;
    Mr2Mode mr2_mode = Mr2Mode::wald_lower_99;
    double pi_c_plan = 0.3;  // planning-stage control response rate
};

// Throws std::invalid_argument naming the offending field.
void validate(const DesignParams& d);

// Planning-stage treatment response rate implied by theta_plan.
double pi_t_planned(const DesignParams& d);

struct InterimResult {
    double theta1_hat = 0.0;
    double se1 = 0.0;
    double p1 = 1.0;
    bool stop_for_futility = false;
    int m = 0;
    double mr1 = 0.0;
    double cp_used = 0.0;
    int n2_final = 0;  // 0 if stopped
};

// Inverse normal combination 1 - Phi(w1*Phi^-1(1-p1) + w2*Phi^-1(1-p2)).
// p-values are clamped to [1e-15, 1-1e-15] before the quantile transform.
double combine_p_values(double p1, double p2, double w1, double w2);

// Conditional error function
//   A(p1) = 1 - Phi((Phi^-1(1-alpha) - w1*Phi^-1(1-p1)) / w2).
double conditional_error(double p1, const DesignParams& d);

// Non-binding futility stop: stop iff theta1_hat < theta_stop (strict).
bool futility_decision(double theta1_hat, double theta_stop);

// Approximate stage I standard error of the log odds ratio,
//   sqrt(1/(n*piT) + 1/(n*(1-piT)) + 1/(n*M*piC) + 1/(n*M*(1-piC))),
// with n the effective (matched) stage I intervention count. M may be
// fractional when evaluating at an expected number of partners.
double approx_se_stage1(double n1_eff, double m, double pi_t, double pi_c);

struct StopContinue {
    double p_stop;
    double p_continue;
};

// p_stop = 1 - Phi((theta - theta_stop)/se); p_continue = 1 - p_stop.
StopContinue futility_probability(double theta, double theta_stop, double se);

// cp = min((1-beta)/p_continue_plan, cp_cap); the cap also covers the case
// p_continue_plan < 1-beta where the ratio exceeds one.
double conditional_power_target(double beta, double p_continue_plan, double cp_cap);

// Conditional power per feasible M (index M-1), fixed before the trial from
// the planning response rates and the planned stage I size.
std::vector<double> conditional_power_table(const DesignParams& d);

// Stage II matching rate estimate: either mr1 itself or the lower limit of
// the one-sided 99% Wald interval mr1 - Phi^-1(0.99)*sqrt(mr1(1-mr1)/(mr1*n1)).
double estimate_stage2_mr(double mr1, int n1, Mr2Mode mode);

struct Stage2Size {
    double n2_star;   // +inf when theta_recalc does not exceed theta_cross
    double mr2_hat;
    int n2_final;     // ceil(n2_star/mr2_hat) clamped to [n2_min, n2_max]
};

Stage2Size recalc_stage2_n(double p1, double se1, double mr1, const DesignParams& d,
                           double theta_recalc, double cp);

struct FinalTest {
    double p_total;
    bool reject;
};

// Reject iff the combined p-value is <= alpha.
FinalTest final_test(double p1, double p2, const DesignParams& d);

} // namespace hct
