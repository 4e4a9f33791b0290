#include "hct/trial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "hct/glm.hpp"

namespace hct {

TrialContext make_trial_context(const DesignParams& d, OutcomeAnalysis analysis,
                                MlWeightMode ml_weights) {
    validate(d);
    TrialContext ctx;
    ctx.design = d;
    ctx.analysis = analysis;
    ctx.ml_weights = ml_weights;
    ctx.cp_by_m = conditional_power_table(d);
    return ctx;
}

namespace {

struct StageEstimate {
    bool ok = false;
    double theta = 0.0;
    double se = 0.0;
    double p = 1.0;
};

using PatientIndex = std::unordered_map<int, const Patient*>;

// Treatment-effect estimate from the matched sets of one stage.
StageEstimate analyze_stage(const TrialContext& ctx, const MatchResult& match,
                            const PatientIndex& by_id) {
    StageEstimate est;
    if (match.matched_sets.empty()) return est;
    const double theta_cross = ctx.design.theta_cross;

    if (ctx.analysis == OutcomeAnalysis::cmh) {
        std::vector<TwoByTwoTable> strata;
        strata.reserve(match.matched_sets.size());
        for (const MatchedSet& set : match.matched_sets) {
            TwoByTwoTable t;
            const Patient& ip = *by_id.at(set.intervention_id);
            t.responders_t = ip.response;
            t.nonresponders_t = 1 - ip.response;
            for (int cid : set.control_ids) {
                const Patient& cp = *by_id.at(cid);
                t.responders_c += cp.response;
                t.nonresponders_c += 1 - cp.response;
            }
            strata.push_back(t);
        }
        CmhResult cmh;
        try {
            cmh = cmh_test(strata);
        } catch (const std::invalid_argument&) {
            return est;
        }
        if (!(cmh.common_or > 0.0) || !std::isfinite(cmh.common_or) ||
            !std::isfinite(cmh.log_or_se) || !(cmh.log_or_se > 0.0))
            return est;
        est.theta = std::log(cmh.common_or);
        est.se = cmh.log_or_se;
        // The CMH statistic tests OR = 1; a nonzero crossing threshold needs
        // the Wald form on the common log odds ratio instead.
        est.p = theta_cross == 0.0 ? cmh.p_one_sided
                                   : 1.0 - norm_cdf((est.theta - theta_cross) / est.se);
        est.ok = true;
        return est;
    }

    DesignMatrix x({"intercept", "treat", "age", "cyto"});
    x.reserve(static_cast<int>(match.matched_sets.size()) * (match.m + 1));
    auto push = [&x](const Patient& p) {
        const double row[4] = {1.0, p.treated ? 1.0 : 0.0, p.age,
                               static_cast<double>(p.cyto)};
        x.push_row(row, p.response);
    };
    for (const MatchedSet& set : match.matched_sets) {
        push(*by_id.at(set.intervention_id));
        for (int cid : set.control_ids) push(*by_id.at(cid));
    }


    FitResult fit;
    try {
        fit = fit_logistic(x);
    } catch (const std::invalid_argument&) {
        return est;  // degenerate response
    }
    if (!fit.converged) return est;  // covers separation
    est.theta = fit.coefficients[1];
    est.se = fit.standard_errors[1];
    est.p = 1.0 - norm_cdf((est.theta - theta_cross) / est.se);
    est.ok = true;
    return est;
}

void fill_single_stage_estimates(TrialOutcome& out, const TrialContext& ctx) {
    StagePair sp;
    sp.theta1 = out.theta1;
    sp.se1 = out.se1;
    sp.mr1 = out.mr1;
    sp.n1 = ctx.design.n1;
    sp.w1 = ctx.design.w1;
    sp.w2 = ctx.design.w2;
    out.theta_ml = estimate_ml(sp, ctx.ml_weights);
    out.theta_fwml = estimate_fwml(sp, ctx.design.w1 * ctx.design.w1);
    out.theta_awml = estimate_awml(sp);
    out.ci_lower = repeated_ci_lower(sp, ctx.design.alpha);
}

TrialOutcome stage1_aborted(TrialOutcome out, Stage1Abort reason, int n1) {
    out.stage1_abort = reason;
    out.stopped_at_interim = true;
    out.rejected = false;
    out.total_n = n1;
    return out;
}

} // namespace

TrialOutcome run_adaptive_trial(RngStream& s, const OutcomeModel& model,
                                const TrialContext& ctx,
                                const std::vector<Patient>& pool, TrialTrace* trace) {
    const DesignParams& d = ctx.design;
    TrialOutcome out;

    int next_id = 0;
    for (const Patient& p : pool) next_id = std::max(next_id, p.id + 1);

    std::vector<Patient> stage1;
    stage1.reserve(d.n1);
    for (int i = 0; i < d.n1; ++i)
        stage1.push_back(generate_patient(s, model, true, next_id++));

    PatientIndex by_id;
    by_id.reserve(pool.size() + stage1.size() + d.n2_max);
    for (const Patient& p : pool) by_id.emplace(p.id, &p);
    for (const Patient& p : stage1) by_id.emplace(p.id, &p);

    // Stage I matching: propensity model on the full pool, then the
    // iterative choice of M.
    MDetermination det;
    try {
        const PropensityScores scores = estimate_propensity(stage1, pool);
        det = determine_m(scores, d.tau, d.m_max);
    } catch (const MatchingInfeasibleError&) {
        return stage1_aborted(std::move(out), Stage1Abort::fit_failed, d.n1);
    }
    out.m = det.m;
    out.mr1 = det.result.matching_rate;
    if (det.result.matched_sets.empty())
        return stage1_aborted(std::move(out), Stage1Abort::no_matches, d.n1);

    const StageEstimate st1 = analyze_stage(ctx, det.result, by_id);
    if (!st1.ok) return stage1_aborted(std::move(out), Stage1Abort::fit_failed, d.n1);
    out.theta1 = st1.theta;
    out.se1 = st1.se;
    out.p1 = st1.p;

    if (trace) {
        for (const MatchedSet& set : det.result.matched_sets)
            trace->stage1_matched_controls.insert(trace->stage1_matched_controls.end(),
                                                  set.control_ids.begin(),
                                                  set.control_ids.end());
        trace->stage1_unmatched = det.result.unmatched_intervention_ids;
    }

    InterimResult interim;
    interim.theta1_hat = st1.theta;
    interim.se1 = st1.se;
    interim.p1 = st1.p;
    interim.m = det.m;
    interim.mr1 = out.mr1;
    interim.stop_for_futility = futility_decision(st1.theta, d.theta_stop);

    if (interim.stop_for_futility) {
        out.stopped_at_interim = true;
        out.rejected = false;
        out.total_n = d.n1;
        fill_single_stage_estimates(out, ctx);
        return out;
    }

    const double theta_recalc =
        d.recalc == RecalcMode::planned_effect ? d.theta_plan : st1.theta;
    interim.cp_used = ctx.cp_by_m[det.m - 1];
    const Stage2Size sz =
        recalc_stage2_n(st1.p, st1.se, out.mr1, d, theta_recalc, interim.cp_used);
    interim.n2_final = sz.n2_final;
    out.cp_used = interim.cp_used;
    out.n2_star = sz.n2_star;
    out.mr2_hat = sz.mr2_hat;
    out.n2_final = sz.n2_final;
    out.total_n = d.n1 + sz.n2_final;

    std::vector<Patient> stage2;
    stage2.reserve(sz.n2_final);
    for (int i = 0; i < sz.n2_final; ++i)
        stage2.push_back(generate_patient(s, model, true, next_id++));
    for (const Patient& p : stage2) by_id.emplace(p.id, &p);

    // Stage II matching pool: everyone offered is a stage II recruit or a
    // stage I leftover; stage I matched controls are never reassigned.
    std::vector<Patient> candidates = stage2;
    for (int uid : det.result.unmatched_intervention_ids)
        candidates.push_back(*by_id.at(uid));

    std::unordered_set<int> used_controls;
    for (const MatchedSet& set : det.result.matched_sets)
        used_controls.insert(set.control_ids.begin(), set.control_ids.end());
    std::vector<Patient> remaining;
    remaining.reserve(pool.size() - used_controls.size());
    for (const Patient& p : pool)
        if (!used_controls.count(p.id)) remaining.push_back(p);

    if (trace) {
        for (const Patient& p : candidates) trace->stage2_candidate_ids.push_back(p.id);
    }

    bool stage2_usable = !remaining.empty();
    MatchResult m2;
    if (stage2_usable) {
        try {
            const PropensityScores scores2 = estimate_propensity(candidates, remaining);
            m2 = match_one_to_m(scores2, det.m);
        } catch (const MatchingInfeasibleError&) {
            stage2_usable = false;
        }
    }
    if (stage2_usable) {
        out.mr2 = m2.matching_rate;
        if (trace) {
            for (const MatchedSet& set : m2.matched_sets)
                trace->stage2_matched_controls.insert(trace->stage2_matched_controls.end(),
                                                      set.control_ids.begin(),
                                                      set.control_ids.end());
        }
    }

    StageEstimate st2;
    if (stage2_usable) st2 = analyze_stage(ctx, m2, by_id);

    if (!st2.ok) {
        // Stage II could not be analysed (perfect separation or nothing
        // matched): its data is ignored for hypothesis testing and
        // estimation, stage I carries the trial.
        out.separation_stage2 = true;
        out.p_total = out.p1;
        out.rejected = out.p1 <= d.alpha;
        fill_single_stage_estimates(out, ctx);
        return out;
    }
    out.theta2 = st2.theta;
    out.se2 = st2.se;
    out.p2 = st2.p;

    const FinalTest ft = final_test(out.p1, out.p2, d);
    out.p_total = ft.p_total;
    out.rejected = ft.reject;

    StagePair sp;
    sp.theta1 = out.theta1;
    sp.se1 = out.se1;
    sp.mr1 = out.mr1;
    sp.n1 = d.n1;
    sp.has_stage2 = true;
    sp.theta2 = out.theta2;
    sp.se2 = out.se2;
    sp.mr2 = out.mr2;
    sp.n2 = out.n2_final;
    sp.w1 = d.w1;
    sp.w2 = d.w2;
    out.theta_ml = estimate_ml(sp, ctx.ml_weights);
    out.theta_fwml = estimate_fwml(sp, d.w1 * d.w1);
    out.theta_awml = estimate_awml(sp);
    out.ci_lower = repeated_ci_lower(sp, d.alpha);
    return out;
}

SingleArmResult run_single_arm(RngStream& s, const OutcomeModel& model, int n,
                               double p0, double alpha) {
    if (n < 1) throw std::invalid_argument("run_single_arm: n must be >= 1");
    int responders = 0;
    for (int i = 0; i < n; ++i) responders += generate_patient(s, model, true, i).response;
    SingleArmResult res;
    res.pi_t_hat = static_cast<double>(responders) / n;
    const double z = (res.pi_t_hat - p0) / std::sqrt(p0 * (1.0 - p0) / n);
    res.rejected = (1.0 - norm_cdf(z)) <= alpha;
    return res;
}

RctResult run_rct(RngStream& s, const OutcomeModel& model, int n_per_arm, double alpha,
                  RctAnalysis analysis) {
    if (n_per_arm < 2) throw std::invalid_argument("run_rct: n_per_arm must be >= 2");
    std::vector<Patient> patients;
    patients.reserve(2 * n_per_arm);
    for (int i = 0; i < 2 * n_per_arm; ++i)
        patients.push_back(generate_patient(s, model, i % 2 == 0, i));

    RctResult res;
    int resp_t = 0, resp_c = 0;
    for (const Patient& p : patients) (p.treated ? resp_t : resp_c) += p.response;
    res.pi_t_hat = static_cast<double>(resp_t) / n_per_arm;
    res.pi_c_hat = static_cast<double>(resp_c) / n_per_arm;

    switch (analysis) {
        case RctAnalysis::z_test: {
            const double pooled = static_cast<double>(resp_t + resp_c) / (2 * n_per_arm);
            if (pooled <= 0.0 || pooled >= 1.0) {
                res.degenerate = true;
                return res;
            }
            const double se = std::sqrt(pooled * (1.0 - pooled) * 2.0 / n_per_arm);
            const double z = (res.pi_t_hat - res.pi_c_hat) / se;
            res.rejected = (1.0 - norm_cdf(z)) <= alpha;
            return res;
        }
        case RctAnalysis::adjusted_logistic: {
            DesignMatrix x({"intercept", "treat", "age", "cyto"});
            x.reserve(2 * n_per_arm);
            for (const Patient& p : patients) {
                const double row[4] = {1.0, p.treated ? 1.0 : 0.0, p.age,
                                       static_cast<double>(p.cyto)};
                x.push_row(row, p.response);
            }
            FitResult fit;
            try {
                fit = fit_logistic(x);
            } catch (const std::invalid_argument&) {
                res.degenerate = true;
                return res;
            }
            if (!fit.converged) {
                res.degenerate = true;
                return res;
            }
            res.rejected = wald_p_value(fit, 1, 0.0) <= alpha;
            return res;
        }
        case RctAnalysis::cmh: {
            // No matched sets in a randomized trial; stratify on the one
            // discrete prognostic covariate.
            std::vector<TwoByTwoTable> strata(2);
            for (const Patient& p : patients) {
                TwoByTwoTable& t = strata[p.cyto];
                if (p.treated) {
                    t.responders_t += p.response;
                    t.nonresponders_t += 1 - p.response;
                } else {
                    t.responders_c += p.response;
                    t.nonresponders_c += 1 - p.response;
                }
            }
            try {
                res.rejected = cmh_test(strata).p_one_sided <= alpha;
            } catch (const std::invalid_argument&) {
                res.degenerate = true;
            }
            return res;
        }
    }
    return res;
}

CmhResult cmh_test(const std::vector<TwoByTwoTable>& strata) {
    double sum_a = 0.0, sum_expect = 0.0, sum_var = 0.0;
    double r_sum = 0.0, s_sum = 0.0;
    double pr = 0.0, psqr = 0.0, qs = 0.0;
    int informative = 0;

    for (const TwoByTwoTable& t : strata) {
        const double a = t.responders_t, b = t.nonresponders_t;
        const double c = t.responders_c, dd = t.nonresponders_c;
        const double row_t = a + b, row_c = c + dd;
        const double col_r = a + c, col_n = b + dd;
        const double n = row_t + row_c;
        if (n < 2.0 || row_t <= 0.0 || row_c <= 0.0 || col_r <= 0.0 || col_n <= 0.0)
            continue;
        ++informative;
        sum_a += a;
        sum_expect += row_t * col_r / n;
        sum_var += row_t * row_c * col_r * col_n / (n * n * (n - 1.0));
        r_sum += a * dd / n;
        s_sum += b * c / n;
        const double p = (a + dd) / n;
        const double q = (b + c) / n;
        pr += p * a * dd / n;
        psqr += (p * b * c + q * a * dd) / n;
        qs += q * b * c / n;
    }
    if (informative == 0 || !(sum_var > 0.0))
        throw std::invalid_argument("cmh_test: all strata degenerate");

    CmhResult res;
    const double z = (sum_a - sum_expect) / std::sqrt(sum_var);
    res.statistic = z * z;
    res.p_one_sided = 1.0 - norm_cdf(z);
    if (s_sum > 0.0) {
        res.common_or = r_sum / s_sum;
        if (r_sum > 0.0) {
            // Robins-Breslow-Greenland variance of the common log odds ratio.
            res.log_or_se = std::sqrt(pr / (2.0 * r_sum * r_sum) +
                                      psqr / (2.0 * r_sum * s_sum) +
                                      qs / (2.0 * s_sum * s_sum));
        }
    } else {
        res.common_or = std::numeric_limits<double>::infinity();
    }
    return res;
}

OneStageResult run_one_stage(RngStream& s, const OutcomeModel& model,
                             const DesignParams& d, int n,
                             const std::vector<Patient>& pool) {
    if (n < 1) throw std::invalid_argument("run_one_stage: n must be >= 1");
    OneStageResult res;

    int next_id = 0;
    for (const Patient& p : pool) next_id = std::max(next_id, p.id + 1);
    std::vector<Patient> patients;
    patients.reserve(n);
    for (int i = 0; i < n; ++i)
        patients.push_back(generate_patient(s, model, true, next_id++));

    MDetermination det;
    try {
        const PropensityScores scores = estimate_propensity(patients, pool);
        det = determine_m(scores, d.tau, d.m_max);
    } catch (const MatchingInfeasibleError&) {
        res.infeasible = true;
        return res;
    }
    res.m = det.m;
    res.mr = det.result.matching_rate;
    if (det.result.matched_sets.empty()) {
        res.infeasible = true;
        return res;
    }

    PatientIndex by_id;
    by_id.reserve(pool.size() + patients.size());
    for (const Patient& p : pool) by_id.emplace(p.id, &p);
    for (const Patient& p : patients) by_id.emplace(p.id, &p);

    TrialContext ctx;
    ctx.design = d;
    const StageEstimate est = analyze_stage(ctx, det.result, by_id);
    if (!est.ok) {
        res.infeasible = true;
        return res;
    }
    res.p_value = est.p;
    res.rejected = est.p <= d.alpha;
    return res;
}

} // namespace hct
