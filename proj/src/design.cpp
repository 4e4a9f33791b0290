#include "hct/design.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "hct/stats.hpp"

namespace hct {

namespace {

constexpr double kPClampLo = 1e-15;
constexpr double kPClampHi = 1.0 - 1e-15;

double clamp_p(double p) { return std::clamp(p, kPClampLo, kPClampHi); }

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
    throw std::invalid_argument("DesignParams." + field + ": " + what);
}

} // namespace

void validate(const DesignParams& d) {
    if (!(d.alpha > 0.0 && d.alpha <= 0.5)) bad_field("alpha", "must lie in (0, 0.5]");
    if (!(d.beta > 0.0 && d.beta < 1.0)) bad_field("beta", "must lie in (0, 1)");
    if (!(d.w1 > 0.0) || !(d.w2 > 0.0)) bad_field("w1/w2", "weights must be positive");
    if (std::fabs(d.w1 * d.w1 + d.w2 * d.w2 - 1.0) > 1e-12)
        bad_field("w1/w2", "w1^2 + w2^2 must equal 1");
    if (d.n1 < 1) bad_field("n1", "must be >= 1");
    if (d.n2_min < 1) bad_field("n2_min", "must be >= 1");
    if (d.n2_max < d.n2_min) bad_field("n2_max", "must be >= n2_min");
    if (!(d.tau >= 0.0)) bad_field("tau", "must be >= 0");
    if (d.m_max < 1) bad_field("m_max", "must be >= 1");
    if (!(d.cp_cap > 0.0 && d.cp_cap < 1.0)) bad_field("cp_cap", "must lie in (0, 1)");
    if (!(d.pi_c_plan > 0.0 && d.pi_c_plan < 1.0))
        bad_field("pi_c_plan", "must lie in (0, 1)");
    if (std::isnan(d.theta_plan) || std::isnan(d.theta_stop) || std::isnan(d.theta_cross))
        bad_field("theta_plan/theta_stop/theta_cross", "must not be NaN");
}

double pi_t_planned(const DesignParams& d) {
    return expit(logit(d.pi_c_plan) + d.theta_plan);
}

double combine_p_values(double p1, double p2, double w1, double w2) {
    const double z1 = norm_quantile(1.0 - clamp_p(p1));
    const double z2 = norm_quantile(1.0 - clamp_p(p2));
    return 1.0 - norm_cdf(w1 * z1 + w2 * z2);
}

double conditional_error(double p1, const DesignParams& d) {
    const double z1 = norm_quantile(1.0 - clamp_p(p1));
    const double za = norm_quantile(1.0 - d.alpha);
    return 1.0 - norm_cdf((za - d.w1 * z1) / d.w2);
}

bool futility_decision(double theta1_hat, double theta_stop) {
    return theta1_hat < theta_stop;
}

double approx_se_stage1(double n1_eff, double m, double pi_t, double pi_c) {
    return std::sqrt(1.0 / (n1_eff * pi_t) + 1.0 / (n1_eff * (1.0 - pi_t)) +
                     1.0 / (n1_eff * m * pi_c) + 1.0 / (n1_eff * m * (1.0 - pi_c)));
}

StopContinue futility_probability(double theta, double theta_stop, double se) {
    const double p_stop = 1.0 - norm_cdf((theta - theta_stop) / se);
    return {p_stop, 1.0 - p_stop};
}

double conditional_power_target(double beta, double p_continue_plan, double cp_cap) {
    return std::min((1.0 - beta) / p_continue_plan, cp_cap);
}

std::vector<double> conditional_power_table(const DesignParams& d) {
    // Fixed before the trial, so the planned n1 stands in for the effective
    // stage I size (the matching rate is unknown at that point).
    const double pi_t = pi_t_planned(d);
    std::vector<double> cp(d.m_max);
    for (int m = 1; m <= d.m_max; ++m) {
        const double se = approx_se_stage1(static_cast<double>(d.n1), m, pi_t, d.pi_c_plan);
        const double p_cont = futility_probability(d.theta_plan, d.theta_stop, se).p_continue;
        cp[m - 1] = conditional_power_target(d.beta, p_cont, d.cp_cap);
    }
    return cp;
}

double estimate_stage2_mr(double mr1, int n1, Mr2Mode mode) {
    if (!(mr1 > 0.0 && mr1 <= 1.0))
        throw std::invalid_argument("estimate_stage2_mr: mr1 must lie in (0, 1]");
    if (mode == Mr2Mode::naive) return mr1;
    if (mr1 >= 1.0) return 1.0;  // zero-variance limit of the Wald bound
    const double lower =
        mr1 - norm_quantile(0.99) * std::sqrt(mr1 * (1.0 - mr1) / (mr1 * n1));
    return std::clamp(lower, 1e-9, 1.0);
}

Stage2Size recalc_stage2_n(double p1, double se1, double mr1, const DesignParams& d,
                           double theta_recalc, double cp) {
    Stage2Size out;
    out.mr2_hat = estimate_stage2_mr(mr1, d.n1, d.mr2_mode);

    const double drift = theta_recalc - d.theta_cross;
    if (!(drift > 0.0)) {
        // Positive part of the recalculation effect is zero: no finite
        // sample size reaches the conditional power, take the maximum.
        out.n2_star = std::numeric_limits<double>::infinity();
        out.n2_final = d.n2_max;
        return out;
    }

    const double z1 = norm_quantile(1.0 - clamp_p(p1));
    const double za = norm_quantile(1.0 - d.alpha);
    const double numerator = norm_quantile(cp) + (za - d.w1 * z1) / d.w2;
    out.n2_star = d.n1 * mr1 * se1 * se1 * numerator * numerator / (drift * drift);

    const double required = std::ceil(out.n2_star / out.mr2_hat);
    const double clamped =
        std::min(static_cast<double>(d.n2_max), std::max(static_cast<double>(d.n2_min), required));
    out.n2_final = static_cast<int>(clamped);
    return out;
}

FinalTest final_test(double p1, double p2, const DesignParams& d) {
    const double p_total = combine_p_values(p1, p2, d.w1, d.w2);
    return {p_total, p_total <= d.alpha};
}

} // namespace hct
