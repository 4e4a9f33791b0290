// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Desk scale (10,000 replications per scenario) throughout.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "hct/config.hpp"
#include "hct/glm.hpp"
#include "hct/harness.hpp"
#include "hct/report.hpp"
#include "oracles.hpp"

using namespace hct;

namespace {

constexpr long kReps = 10000;
constexpr std::uint64_t kSeed = 20200622;
const double kThetaPlan = std::log(7.0 / 3.0);

int g_failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%2d] %s  %s: %s\n", idx, pass ? "PASS" : "FAIL", name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

bool within(double x, double center, double tol) { return std::fabs(x - center) <= tol; }

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

ScenarioConfig adaptive_cfg(double theta, double sigma, int n_c, int n1, double tau,
                            RecalcMode recalc) {
    ScenarioConfig cfg;
    cfg.kind = DesignKind::adaptive;
    cfg.model.theta = theta;
    cfg.model.sigma = sigma;
    cfg.design.n1 = n1;
    cfg.design.n2_min = 10;
    cfg.design.n2_max = 100 - n1;
    cfg.design.m_max = n_c == 500 ? 5 : 10;
    cfg.design.tau = tau;
    cfg.design.recalc = recalc;
    cfg.n_controls = n_c;
    cfg.replications = kReps;
    cfg.base_seed = kSeed;
    return cfg;
}

void criterion1_type_one_error() {
    const AggregateStats a =
        run_scenario(adaptive_cfg(0.0, 0.0, 500, 20, 0.05, RecalcMode::planned_effect));
    const bool pass = a.reject_rate <= 0.030 && within(a.reject_rate, 0.0242, 0.008) &&
                      within(a.stop_rate, 0.6807, 0.02) &&
                      within(a.expected_total_n, 42.18, 1.5);
    report(1, "type I error, Table 2 row 1", pass,
           fmt("reject=%.4f [<=0.030 and 0.0242+-0.008], p_stop=%.4f [0.6807+-0.02], "
               "E[n]=%.2f [42.18+-1.5]",
               a.reject_rate, a.stop_rate, a.expected_total_n));
}

void criterion2_analytic_futility() {
    const double se_null = approx_se_stage1(19.724, 4.93, 0.3, 0.3);
    const double p_null = futility_probability(0.0, std::log(1.3), se_null).p_stop;
    const double se_alt = approx_se_stage1(19.724, 4.93, 0.5, 0.3);
    const double p_alt = futility_probability(kThetaPlan, std::log(1.3), se_alt).p_stop;
    const bool pass = within(p_null, 0.6868, 0.0005) && within(p_alt, 0.1219, 0.0005);
    report(2, "analytic stop probabilities", pass,
           fmt("p_stop(H0)=%.5f [0.6868+-0.0005], p_stop(H1)=%.5f [0.1219+-0.0005]",
               p_null, p_alt));
}

void criterion3_power() {
    const AggregateStats a = run_scenario(
        adaptive_cfg(kThetaPlan, 0.0, 1000, 25, 0.05, RecalcMode::planned_effect));
    const bool pass =
        within(a.reject_rate, 0.7931, 0.02) && within(a.expected_total_n, 54.68, 2.0);
    report(3, "power, Table 3", pass,
           fmt("power=%.4f [0.7931+-0.02], E[n]=%.2f [54.68+-2]", a.reject_rate,
               a.expected_total_n));
}

void criterion4_matching_diagnostics() {
    const AggregateStats a = run_scenario(
        adaptive_cfg(kThetaPlan, 0.0, 1000, 20, 0.05, RecalcMode::planned_effect));
    const bool pass = within(a.expected_m, 9.85, 0.4) &&
                      within(a.expected_mr1, 0.9866, 0.01) &&
                      within(a.expected_mr2_hat, 0.9268, 0.015);
    report(4, "matching diagnostics, Table 6", pass,
           fmt("E[M]=%.3f [9.85+-0.4], E[mr1]=%.4f [0.9866+-0.01], E[mr2hat]=%.4f "
               "[0.9268+-0.015]",
               a.expected_m, a.expected_mr1, a.expected_mr2_hat));
}

void criterion5_residual_degradation() {
    const AggregateStats sigma1 = run_scenario(
        adaptive_cfg(kThetaPlan, 1.0, 500, 20, 0.05, RecalcMode::planned_effect));
    const AggregateStats sigma0 = run_scenario(
        adaptive_cfg(kThetaPlan, 0.0, 500, 20, 0.05, RecalcMode::planned_effect));
    const bool pass = within(sigma1.reject_rate, 0.6518, 0.025) &&
                      sigma1.reject_rate < sigma0.reject_rate - 0.08;
    report(5, "residual-variance degradation", pass,
           fmt("power(sigma=1)=%.4f [0.6518+-0.025], power(sigma=0)=%.4f, drop=%.4f "
               "[>0.08]",
               sigma1.reject_rate, sigma0.reject_rate,
               sigma0.reject_rate - sigma1.reject_rate));
}

void criterion6_comparators() {
    ScenarioConfig sa;
    sa.kind = DesignKind::single_arm;
    sa.model.theta = 0.0;
    sa.model.sigma = 1.0;
    sa.replications = kReps;
    sa.base_seed = kSeed;
    const AggregateStats single = run_scenario(sa);

    ScenarioConfig rct;
    rct.kind = DesignKind::rct;
    rct.model.theta = kThetaPlan;
    rct.model.sigma = 0.0;
    rct.replications = kReps;
    rct.base_seed = kSeed;
    rct.rct_analysis = RctAnalysis::adjusted_logistic;
    const AggregateStats logistic = run_scenario(rct);
    rct.rct_analysis = RctAnalysis::z_test;
    const AggregateStats ztest = run_scenario(rct);

    const bool pass = within(single.reject_rate, 0.0595, 0.01) &&
                      within(logistic.reject_rate, 0.7410, 0.02) &&
                      logistic.reject_rate > ztest.reject_rate;
    report(6, "comparator designs", pass,
           fmt("single-arm sigma=1 type I=%.4f [0.0595+-0.01], RCT logistic power=%.4f "
               "[0.7410+-0.02] > z-test %.4f",
               single.reject_rate, logistic.reject_rate, ztest.reject_rate));
}

void criterion7_appendix_null() {
    bool pass = true;
    double worst = 0.0;
    std::string worst_name = "-";
    for (double sigma : {0.5, 1.0})
        for (RecalcMode recalc : {RecalcMode::planned_effect, RecalcMode::interim_estimate})
            for (int n_c : {500, 1000})
                for (int n1 : {20, 25, 30}) {
                    const AggregateStats a =
                        run_scenario(adaptive_cfg(0.0, sigma, n_c, n1, 0.05, recalc));
                    if (a.reject_rate > worst) {
                        worst = a.reject_rate;
                        worst_name = fmt("sigma=%.1f/%s/nC=%d/n1=%d", sigma,
                                         to_string(recalc), n_c, n1);
                    }
                    pass = pass && a.reject_rate <= 0.030;
                }
    report(7, "appendix null scenarios (24 runs)", pass,
           fmt("max rejection=%.4f at %s [<=0.030 each]", worst, worst_name.c_str()));
}

void criterion8_estimator_study() {
    ScenarioConfig base = adaptive_cfg(0.0, 0.0, 1000, 25, 0.05, RecalcMode::planned_effect);
    base.design.n2_min = 10;
    base.design.n2_max = 75;
    base.design.theta_stop = -std::numeric_limits<double>::infinity();
    std::vector<double> grid;
    for (int i = -1; i <= 20; ++i) grid.push_back(i / 10.0);

    const auto rows = estimator_study(base, grid);
    double max_awml = 0.0, cov_lo = 1.0, cov_hi = 0.0;
    double ml_at_2 = 0.0, awml_at_2 = 0.0;
    for (const auto& r : rows) {
        max_awml = std::max(max_awml, std::fabs(r.stats.bias_awml));
        cov_lo = std::min(cov_lo, r.stats.ci_coverage);
        cov_hi = std::max(cov_hi, r.stats.ci_coverage);
        if (within(r.theta, 2.0, 1e-9)) {
            ml_at_2 = r.stats.bias_ml;
            awml_at_2 = r.stats.bias_awml;
        }
    }
    const bool bias_ok = max_awml <= 0.08;
    const bool ml_ok = ml_at_2 - awml_at_2 >= 0.1;
    const bool cov_ok = cov_lo >= 0.965 && cov_hi <= 0.985;
    report(8, "estimator study over the theta grid", bias_ok && ml_ok && cov_ok,
           fmt("max|AWML bias|=%.4f [<=0.08], ML-AWML bias at theta=2: %.4f [>=0.1], "
               "coverage in [%.4f, %.4f] [0.965..0.985]",
               max_awml, ml_at_2 - awml_at_2, cov_lo, cov_hi));
}

void criterion9_property_suite() {
    bool pass = true;
    std::string note;

    // (a) combined p-value uniform under the null
    {
        RngStream s(9001, 0);
        std::vector<double> ps(100000);
        const double w = 1.0 / std::sqrt(2.0);
        for (double& p : ps) p = combine_p_values(s.uniform01(), s.uniform01(), w, w);
        const double ks = oracle::ks_uniform_p(ps);
        if (ks <= 0.01) {
            pass = false;
            note += fmt("KS p=%.4f; ", ks);
        }
    }
    // (b) conditional-error / final-test consistency
    {
        DesignParams d;
        int mismatches = 0;
        for (int i = 1; i <= 100; ++i)
            for (int j = 1; j <= 100; ++j) {
                const double p1 = (i - 0.5) / 100.0, p2 = (j - 0.5) / 100.0;
                const double a = conditional_error(p1, d);
                if (std::fabs(p2 - a) < 1e-12) continue;
                if (final_test(p1, p2, d).reject != (p2 <= a)) ++mismatches;
            }
        if (mismatches != 0) {
            pass = false;
            note += fmt("grid mismatches=%d; ", mismatches);
        }
    }
    // (c) matching invariants on random instances
    {
        RngStream rng(9002, 0);
        int violations = 0;
        for (int rep = 0; rep < 200; ++rep) {
            PropensityScores s;
            int id = 0;
            const int ni = 2 + static_cast<int>(rng.uniform01() * 8);
            const int nc = 5 + static_cast<int>(rng.uniform01() * 40);
            for (int i = 0; i < ni; ++i)
                s.intervention.push_back({id++, draw_normal(rng, 0, 1)});
            for (int c = 0; c < nc; ++c)
                s.controls.push_back({id++, draw_normal(rng, 0, 1)});
            s.pooled_sd = 0.4 + rng.uniform01();
            double prev_rate = 2.0;
            for (int m = 1; m <= 4; ++m) {
                const MatchResult r = match_one_to_m(s, m);
                if (r.matching_rate > prev_rate + 1e-12) ++violations;
                prev_rate = r.matching_rate;
                std::vector<int> used;
                for (const MatchedSet& set : r.matched_sets) {
                    if (static_cast<int>(set.control_ids.size()) != m) ++violations;
                    used.insert(used.end(), set.control_ids.begin(), set.control_ids.end());
                    double is = 0;
                    for (const auto& p : s.intervention)
                        if (p.id == set.intervention_id) is = p.score;
                    for (int cid : set.control_ids)
                        for (const auto& c : s.controls)
                            if (c.id == cid &&
                                std::fabs(c.score - is) > 0.2 * s.pooled_sd + 1e-15)
                                ++violations;
                }
                std::sort(used.begin(), used.end());
                if (std::adjacent_find(used.begin(), used.end()) != used.end())
                    ++violations;
            }
        }
        if (violations != 0) {
            pass = false;
            note += fmt("matching violations=%d; ", violations);
        }
    }
    // (d) bit-exact determinism across worker counts
    {
        const ScenarioConfig cfg =
            adaptive_cfg(kThetaPlan, 0.0, 500, 20, 0.05, RecalcMode::planned_effect);
        ScenarioConfig small = cfg;
        small.replications = 2000;
        const std::string csv1 = results_csv({{small, run_scenario(small, 1)}});
        const std::string csv2 = results_csv({{small, run_scenario(small, 2)}});
        const std::string csv4 = results_csv({{small, run_scenario(small, 4)}});
        if (csv1 != csv2 || csv1 != csv4) {
            pass = false;
            note += "thread determinism broken; ";
        }
    }
    // (e) glm against the 2x2 closed form
    {
        DesignMatrix x({"intercept", "treat"});
        auto rows = [&x](int count, double treat, int y) {
            const double row[2] = {1.0, treat};
            for (int i = 0; i < count; ++i) x.push_row(row, y);
        };
        rows(15, 1, 1);
        rows(15, 1, 0);
        rows(9, 0, 1);
        rows(21, 0, 0);
        const FitResult fit = fit_logistic(x);
        const auto ref = log_odds_ratio_2x2({15, 15, 9, 21});
        if (!fit.converged || std::fabs(fit.coefficients[1] - ref.estimate) > 1e-6 ||
            std::fabs(fit.standard_errors[1] - ref.se) > 1e-6) {
            pass = false;
            note += "glm/2x2 oracle mismatch; ";
        }
    }
    report(9, "property suite", pass, pass ? "all properties hold" : note);
}

void criterion10_fixed_design_search() {
    ScenarioConfig base =
        adaptive_cfg(kThetaPlan, 0.0, 500, 20, 0.05, RecalcMode::planned_effect);
    const FixedNResult n500 = find_fixed_n(base, 0.8);
    base.n_controls = 1000;
    base.design.m_max = 10;
    const FixedNResult n1000 = find_fixed_n(base, 0.8);
    const bool pass = within(n500.n, 65, 3) && within(n1000.n, 58, 3);
    report(10, "fixed-design sample size search", pass,
           fmt("n_fixed(nC=500)=%d [65+-3] power=%.3f; n_fixed(nC=1000)=%d [58+-3] "
               "power=%.3f",
               n500.n, n500.power, n1000.n, n1000.power));
}

} // namespace

int main() {
    std::printf("hctsim acceptance suite: %ld replications per scenario, base seed %llu\n",
                kReps, static_cast<unsigned long long>(kSeed));
    criterion1_type_one_error();
    criterion2_analytic_futility();
    criterion3_power();
    criterion4_matching_diagnostics();
    criterion5_residual_degradation();
    criterion6_comparators();
    criterion7_appendix_null();
    criterion8_estimator_study();
    criterion9_property_suite();
    criterion10_fixed_design_search();
    std::printf("RESULT: %d/10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
