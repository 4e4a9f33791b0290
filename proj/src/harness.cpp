#include "hct/harness.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace hct {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr long kChunk = 16;
constexpr std::uint64_t kPoolStream = 0xFFFFFFFFFFFFFFFFull;

struct RepRecord {
    double total_n = kNaN;
    double m = kNaN;
    double mr1 = kNaN;
    double mr2 = kNaN;
    double est_ml = kNaN;
    double est_fwml = kNaN;
    double est_awml = kNaN;
    double ci_lower = kNaN;
    double pi_t = kNaN;
    double pi_c = kNaN;
    bool rejected = false;
    bool stopped = false;
    bool separation2 = false;
    bool stage1_abort = false;
    bool degenerate = false;
    bool fault = false;
};

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

struct MeanAcc {
    double sum = 0.0;
    long n = 0;
    void add(double v) {
        if (!std::isnan(v)) {
            sum += v;
            ++n;
        }
    }
    double mean() const { return n > 0 ? sum / n : kNaN; }
};

double rate_se(double rate, long n) {
    return n > 0 ? std::sqrt(rate * (1.0 - rate) / n) : kNaN;
}

RepRecord run_replication(const ScenarioConfig& cfg, const TrialContext& ctx,
                          const std::vector<Patient>& shared_pool, long rep) {
    RepRecord rec;
    RngStream s(cfg.base_seed, static_cast<std::uint64_t>(rep));

    switch (cfg.kind) {
        case DesignKind::adaptive: {
            std::vector<Patient> local;
            const std::vector<Patient>* pool = &shared_pool;
            if (!cfg.fixed_pool) {
                local = generate_pool(s, cfg.model, cfg.n_controls);
                pool = &local;
            }
            const TrialOutcome out = run_adaptive_trial(s, cfg.model, ctx, *pool);
            rec.total_n = out.total_n;
            rec.m = out.m > 0 ? out.m : kNaN;
            rec.mr1 = out.mr1;
            rec.mr2 = out.mr2;
            rec.est_ml = out.theta_ml;
            rec.est_fwml = out.theta_fwml;
            rec.est_awml = out.theta_awml;
            rec.ci_lower = out.ci_lower;
            rec.rejected = out.rejected;
            rec.stopped = out.stopped_at_interim;
            rec.separation2 = out.separation_stage2;
            rec.stage1_abort = out.stage1_abort != Stage1Abort::none;
            break;
        }
        case DesignKind::one_stage: {
            const std::vector<Patient> pool = generate_pool(s, cfg.model, cfg.n_controls);
            const OneStageResult res =
                run_one_stage(s, cfg.model, cfg.design, cfg.one_stage_n, pool);
            rec.total_n = cfg.one_stage_n;
            rec.m = res.m > 0 ? res.m : kNaN;
            rec.mr1 = res.mr;
            rec.rejected = res.rejected;
            rec.stage1_abort = res.infeasible;
            break;
        }
        case DesignKind::single_arm: {
            const SingleArmResult res = run_single_arm(s, cfg.model, cfg.single_arm_n,
                                                       cfg.single_arm_p0, cfg.design.alpha);
            rec.total_n = cfg.single_arm_n;
            rec.rejected = res.rejected;
            rec.pi_t = res.pi_t_hat;
            break;
        }
        case DesignKind::rct: {
            const RctResult res = run_rct(s, cfg.model, cfg.rct_n_per_arm, cfg.rct_alpha,
                                          cfg.rct_analysis);
            rec.total_n = 2.0 * cfg.rct_n_per_arm;
            rec.rejected = res.rejected;
            rec.pi_t = res.pi_t_hat;
            rec.pi_c = res.pi_c_hat;
            rec.degenerate = res.degenerate;
            break;
        }
    }
    return rec;
}

} // namespace

AggregateStats run_scenario(const ScenarioConfig& cfg, int threads) {
    if (cfg.replications < 1)
        throw std::invalid_argument("run_scenario: replications must be >= 1");
    validate(cfg.design);

    TrialContext ctx;
    if (cfg.kind == DesignKind::adaptive)
        ctx = make_trial_context(cfg.design, cfg.analysis, cfg.ml_weights);

    std::vector<Patient> shared_pool;
    if (cfg.kind == DesignKind::adaptive && cfg.fixed_pool) {
        RngStream pool_stream(cfg.base_seed, kPoolStream);
        shared_pool = generate_pool(pool_stream, cfg.model, cfg.n_controls);
    }

    const long reps = cfg.replications;
    std::vector<RepRecord> records(reps);
    std::atomic<long> next{0};
    auto worker = [&]() {
        for (;;) {
            const long begin = next.fetch_add(kChunk);
            if (begin >= reps) break;
            const long end = std::min(begin + kChunk, reps);
            for (long r = begin; r < end; ++r) {
                try {
                    records[r] = run_replication(cfg, ctx, shared_pool, r);
                } catch (...) {
                    records[r] = RepRecord{};
                    records[r].fault = true;
                }
            }
        }
    };

    const int nthreads = resolve_threads(threads);
    if (nthreads <= 1 || reps < 2 * kChunk) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Sequential reduction in replication order keeps the result identical
    // for every worker count.
    AggregateStats agg;
    agg.replications = reps;
    long rejected = 0, stopped = 0;
    MeanAcc total_n, mean_m, mean_mr1, mean_mr2, mean_pi_t, mean_pi_c;
    MeanAcc ml, fwml, awml, ml2, fwml2, awml2, cover;
    const double theta = cfg.model.theta;
    for (const RepRecord& r : records) {
        rejected += r.rejected ? 1 : 0;
        stopped += r.stopped ? 1 : 0;
        agg.separation_count += r.separation2 ? 1 : 0;
        agg.stage1_abort_count += r.stage1_abort ? 1 : 0;
        agg.degenerate_count += r.degenerate ? 1 : 0;
        agg.fault_count += r.fault ? 1 : 0;
        total_n.add(r.total_n);
        mean_m.add(r.m);
        mean_mr1.add(r.mr1);
        mean_mr2.add(r.mr2);
        mean_pi_t.add(r.pi_t);
        mean_pi_c.add(r.pi_c);
        ml.add(r.est_ml - theta);
        fwml.add(r.est_fwml - theta);
        awml.add(r.est_awml - theta);
        ml2.add((r.est_ml - theta) * (r.est_ml - theta));
        fwml2.add((r.est_fwml - theta) * (r.est_fwml - theta));
        awml2.add((r.est_awml - theta) * (r.est_awml - theta));
        if (!std::isnan(r.ci_lower)) cover.add(r.ci_lower <= theta ? 1.0 : 0.0);
    }
    agg.reject_rate = static_cast<double>(rejected) / reps;
    agg.reject_se = rate_se(agg.reject_rate, reps);
    agg.stop_rate = static_cast<double>(stopped) / reps;
    agg.stop_se = rate_se(agg.stop_rate, reps);
    agg.expected_total_n = total_n.mean();
    agg.expected_m = mean_m.mean();
    agg.expected_mr1 = mean_mr1.mean();
    agg.expected_mr2 = mean_mr2.mean();
    agg.mean_pi_t = mean_pi_t.mean();
    agg.mean_pi_c = mean_pi_c.mean();
    agg.bias_ml = ml.mean();
    agg.bias_fwml = fwml.mean();
    agg.bias_awml = awml.mean();
    agg.rmse_ml = std::sqrt(ml2.mean());
    agg.rmse_fwml = std::sqrt(fwml2.mean());
    agg.rmse_awml = std::sqrt(awml2.mean());
    agg.ci_coverage = cover.mean();

    if (cfg.kind == DesignKind::adaptive || cfg.kind == DesignKind::one_stage) {
        if (agg.expected_mr1 > 0.0 && agg.expected_mr1 <= 1.0)
            agg.expected_mr2_hat =
                estimate_stage2_mr(agg.expected_mr1, cfg.design.n1, cfg.design.mr2_mode);
        if (cfg.kind == DesignKind::adaptive && agg.expected_m > 0.0 &&
            agg.expected_mr1 > 0.0) {
            const double pi_c = cfg.design.pi_c_plan;
            const double pi_t = expit(logit(pi_c) + cfg.model.theta);
            const double se = approx_se_stage1(agg.expected_mr1 * cfg.design.n1,
                                               agg.expected_m, pi_t, pi_c);
            agg.approx_p_stop =
                futility_probability(cfg.model.theta, cfg.design.theta_stop, se).p_stop;
        }
    }
    return agg;
}

std::vector<EstimatorStudyRow> estimator_study(const ScenarioConfig& base,
                                               const std::vector<double>& theta_grid,
                                               int threads) {
    if (theta_grid.empty())
        throw std::invalid_argument("estimator_study: theta grid must be non-empty");
    if (!(base.design.theta_stop == -std::numeric_limits<double>::infinity()))
        throw std::invalid_argument(
            "estimator_study: futility must be disabled (theta_stop = -inf)");
    if (base.kind != DesignKind::adaptive)
        throw std::invalid_argument("estimator_study: requires the adaptive design");

    std::vector<EstimatorStudyRow> rows;
    rows.reserve(theta_grid.size());
    for (double theta : theta_grid) {
        // Only the data-generating effect varies; the design (including the
        // planned effect driving the recalculation) stays as configured.
        ScenarioConfig cfg = base;
        cfg.model.theta = theta;
        rows.push_back({theta, run_scenario(cfg, threads)});
    }
    return rows;
}

std::vector<FutilityRow> futility_table(const std::vector<double>& n_eff,
                                        const std::vector<double>& m,
                                        const std::vector<double>& theta_stop,
                                        const std::vector<HypothesisPoint>& hypotheses,
                                        double pi_c) {
    if (n_eff.empty() || m.empty() || theta_stop.empty() || hypotheses.empty())
        throw std::invalid_argument("futility_table: empty grid");
    std::vector<FutilityRow> rows;
    rows.reserve(n_eff.size() * m.size() * theta_stop.size() * hypotheses.size());
    for (double ts : theta_stop)
        for (const HypothesisPoint& h : hypotheses)
            for (double mm : m)
                for (double n : n_eff) {
                    FutilityRow row;
                    row.n_eff = n;
                    row.m = mm;
                    row.theta_stop = ts;
                    row.theta = h.theta;
                    row.pi_t = h.pi_t;
                    row.pi_c = pi_c;
                    row.se = approx_se_stage1(n, mm, h.pi_t, pi_c);
                    const StopContinue sc = futility_probability(h.theta, ts, row.se);
                    row.p_stop = sc.p_stop;
                    row.p_continue = sc.p_continue;
                    rows.push_back(row);
                }
    return rows;
}

FixedNResult find_fixed_n(const ScenarioConfig& base, double target_power, int n_ceiling,
                          int threads) {
    constexpr int kMinN = 2;
    if (target_power <= 0.0) return {kMinN, kNaN, kNaN};
    if (target_power >= 1.0)
        throw std::invalid_argument("find_fixed_n: target power must be < 1");

    ScenarioConfig cfg = base;
    cfg.kind = DesignKind::one_stage;
    auto power_at = [&](int n) {
        cfg.one_stage_n = n;  // same base_seed: common random numbers across n
        return run_scenario(cfg, threads).reject_rate;
    };

    int lo = kMinN;  // power(lo) assumed below target
    int hi = 16;
    double p_hi = power_at(hi);
    while (p_hi < target_power) {
        lo = hi;
        hi *= 2;
        if (hi > n_ceiling)
            throw std::runtime_error("find_fixed_n: target power unreachable below ceiling");
        p_hi = power_at(hi);
    }
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        const double p_mid = power_at(mid);
        if (p_mid >= target_power) {
            hi = mid;
            p_hi = p_mid;
        } else {
            lo = mid;
        }
    }
    FixedNResult res;
    res.n = hi;
    res.power = p_hi;
    res.mc_se = rate_se(p_hi, cfg.replications);
    return res;
}

} // namespace hct
