#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hct/design.hpp"
#include "hct/rng.hpp"
#include "hct/stats.hpp"
#include "oracles.hpp"

using namespace hct;

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}

TEST_CASE("combine_p_values") {
    CHECK(combine_p_values(0.5, 0.5, kInvSqrt2, kInvSqrt2) == doctest::Approx(0.5));
    // z = 2*1.959964/sqrt(2) = 2.77180
    const double expected = 1.0 - oracle::norm_cdf_ref(2.0 * oracle::norm_quantile_ref(0.975) * kInvSqrt2);
    CHECK(combine_p_values(0.025, 0.025, kInvSqrt2, kInvSqrt2) ==
          doctest::Approx(expected).epsilon(1e-10));
    CHECK(combine_p_values(0.025, 0.025, kInvSqrt2, kInvSqrt2) ==
          doctest::Approx(0.00279).epsilon(2e-3));
    CHECK(combine_p_values(0.1, 0.9, kInvSqrt2, kInvSqrt2) ==
          doctest::Approx(0.5).epsilon(1e-12));
    // extreme inputs are clamped instead of blowing up
    CHECK(combine_p_values(0.0, 1.0, kInvSqrt2, kInvSqrt2) ==
          doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("combine_p_values is strictly increasing in each argument") {
    const std::vector<double> grid{0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99};
    for (double p2 : grid)
        for (std::size_t i = 1; i < grid.size(); ++i)
            CHECK(combine_p_values(grid[i], p2, kInvSqrt2, kInvSqrt2) >
                  combine_p_values(grid[i - 1], p2, kInvSqrt2, kInvSqrt2));
    for (double p1 : grid)
        for (std::size_t i = 1; i < grid.size(); ++i)
            CHECK(combine_p_values(p1, grid[i], kInvSqrt2, kInvSqrt2) >
                  combine_p_values(p1, grid[i - 1], kInvSqrt2, kInvSqrt2));
}

TEST_CASE("combined p-value is uniform under independent uniforms") {
    RngStream s(314159, 0);
    std::vector<double> ps(100000);
    for (double& p : ps)
        p = combine_p_values(s.uniform01(), s.uniform01(), kInvSqrt2, kInvSqrt2);
    CHECK(oracle::ks_uniform_p(ps) > 0.01);
}

TEST_CASE("conditional_error") {
    DesignParams d;  // alpha 0.025, equal weights
    CHECK(conditional_error(0.5, d) == doctest::Approx(0.00279).epsilon(2e-3));
    // numerator vanishes at p1 = 1 - Phi(Phi^-1(1-alpha)/w1)
    const double p1 = 1.0 - norm_cdf(norm_quantile(1.0 - d.alpha) / d.w1);
    CHECK(conditional_error(p1, d) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(conditional_error(1.0 - 1e-12, d) < 1e-6);
    // monotone decreasing
    double prev = 1.0;
    for (double p = 0.001; p < 1.0; p += 0.001) {
        const double a = conditional_error(p, d);
        CHECK(a < prev);
        prev = a;
    }
}

TEST_CASE("conditional error and final test agree on a 100x100 grid") {
    DesignParams d;
    for (int i = 1; i <= 100; ++i)
        for (int j = 1; j <= 100; ++j) {
            const double p1 = (i - 0.5) / 100.0;
            const double p2 = (j - 0.5) / 100.0;
            const double a = conditional_error(p1, d);
            if (std::fabs(p2 - a) < 1e-12) continue;  // numeric boundary
            CHECK(final_test(p1, p2, d).reject == (p2 <= a));
        }
}

TEST_CASE("futility_decision is strict") {
    const double stop = std::log(1.3);
    CHECK(futility_decision(0.20, stop));
    CHECK_FALSE(futility_decision(stop, stop));
    CHECK_FALSE(futility_decision(0.85, stop));
    CHECK_FALSE(futility_decision(-5.0, -std::numeric_limits<double>::infinity()));
}

TEST_CASE("approx_se_stage1 evaluates the four-term formula") {
    CHECK(approx_se_stage1(19.724, 4.93, 0.3, 0.3) ==
          doctest::Approx(0.53889).epsilon(1e-4));
    CHECK(approx_se_stage1(19.724, 4.93, 0.5, 0.3) ==
          doctest::Approx(0.50182).epsilon(2e-4));
    // control terms vanish as M grows
    const double limit = std::sqrt(1.0 / (19.724 * 0.5) + 1.0 / (19.724 * 0.5));
    CHECK(approx_se_stage1(19.724, 1e12, 0.5, 0.3) == doctest::Approx(limit).epsilon(1e-9));
}

TEST_CASE("futility_probability reproduces the reported stop probabilities") {
    const double stop = std::log(1.3);
    const double se_null = approx_se_stage1(19.724, 4.93, 0.3, 0.3);
    const StopContinue sc0 = futility_probability(0.0, stop, se_null);
    CHECK(sc0.p_stop == doctest::Approx(0.6868).epsilon(0.0005 / 0.6868));

    const double se_alt = approx_se_stage1(19.724, 4.93, 0.5, 0.3);
    const StopContinue sc1 = futility_probability(std::log(7.0 / 3.0), stop, se_alt);
    CHECK(sc1.p_stop == doctest::Approx(0.1219).epsilon(0.0005 / 0.1219));

    CHECK(futility_probability(stop, stop, 0.5).p_stop == doctest::Approx(0.5));
    // exact complement and monotone decreasing in theta
    double prev = 2.0;
    for (double theta = -1.0; theta <= 2.0; theta += 0.05) {
        const StopContinue sc = futility_probability(theta, stop, 0.5);
        CHECK(sc.p_stop + sc.p_continue == 1.0);
        CHECK(sc.p_stop < prev);
        prev = sc.p_stop;
    }
}

TEST_CASE("conditional_power_target") {
    CHECK(conditional_power_target(0.2, 0.87810, 0.99) ==
          doctest::Approx(0.91106).epsilon(1e-5));
    CHECK(conditional_power_target(0.2, 0.75, 0.99) == doctest::Approx(0.99));
    CHECK(conditional_power_target(0.2, 1.0, 0.99) == doctest::Approx(0.8));
}

TEST_CASE("conditional_power_table looks up by interim M") {
    DesignParams d;
    d.n1 = 20;
    d.m_max = 5;
    const std::vector<double> cp = conditional_power_table(d);
    REQUIRE(cp.size() == 5);
    for (std::size_t i = 1; i < cp.size(); ++i) CHECK(cp[i] <= cp[i - 1] + 1e-12);
    // hand evaluation for M = 5
    const double se = approx_se_stage1(20, 5, pi_t_planned(d), 0.3);
    const double pc = futility_probability(d.theta_plan, d.theta_stop, se).p_continue;
    CHECK(cp[4] == doctest::Approx(std::min(0.8 / pc, 0.99)).epsilon(1e-12));
    // futility disabled: continuation is certain, cp = 1 - beta
    DesignParams open = d;
    open.theta_stop = -std::numeric_limits<double>::infinity();
    for (double v : conditional_power_table(open)) CHECK(v == doctest::Approx(0.8));
}

TEST_CASE("estimate_stage2_mr") {
    CHECK(estimate_stage2_mr(0.9862, 20, Mr2Mode::wald_lower_99) ==
          doctest::Approx(0.92509).epsilon(1e-5));
    CHECK(estimate_stage2_mr(1.0, 20, Mr2Mode::wald_lower_99) == 1.0);
    CHECK(estimate_stage2_mr(0.95, 20, Mr2Mode::naive) == 0.95);
    // clamped into (0, 1]
    CHECK(estimate_stage2_mr(0.05, 5, Mr2Mode::wald_lower_99) > 0.0);
    CHECK_THROWS_AS(estimate_stage2_mr(0.0, 20, Mr2Mode::wald_lower_99),
                    std::invalid_argument);
}

TEST_CASE("recalc_stage2_n evaluates the sample size formula") {
    DesignParams d;
    d.n1 = 20;
    d.n2_min = 10;
    d.n2_max = 80;
    d.mr2_mode = Mr2Mode::naive;

    SUBCASE("direct formula value") {
        // n1*mr1 = 19.724, se1 from the four-term approximation, cp = 0.9, theta_recalc = 0.84730
        const double mr1 = 19.724 / 20.0;
        const double se1 = approx_se_stage1(19.724, 4.93, 0.3, 0.3);
        const Stage2Size sz = recalc_stage2_n(0.1, se1, mr1, d, 0.84730, 0.9);
        CHECK(sz.n2_star == doctest::Approx(61.29).epsilon(5e-4));
        CHECK(sz.n2_final ==
              static_cast<int>(std::ceil(sz.n2_star / mr1)));
    }
    SUBCASE("positive part clamps to the maximum") {
        const Stage2Size sz = recalc_stage2_n(0.1, 0.5, 0.95, d, 0.0, 0.9);
        CHECK(std::isinf(sz.n2_star));
        CHECK(sz.n2_final == d.n2_max);
        const Stage2Size neg = recalc_stage2_n(0.1, 0.5, 0.95, d, -0.4, 0.9);
        CHECK(neg.n2_final == d.n2_max);
    }
    SUBCASE("lower clamp") {
        const Stage2Size sz = recalc_stage2_n(0.001, 0.2, 1.0, d, 2.5, 0.8);
        CHECK(sz.n2_final == d.n2_min);
    }
    SUBCASE("monotone in theta_recalc and in the stage II rate estimate") {
        double prev = 1e18;
        for (double theta = 0.2; theta <= 1.5; theta += 0.1) {
            const Stage2Size sz = recalc_stage2_n(0.2, 0.5, 0.95, d, theta, 0.9);
            CHECK(sz.n2_star <= prev + 1e-9);
            CHECK(sz.n2_final >= d.n2_min);
            CHECK(sz.n2_final <= d.n2_max);
            prev = sz.n2_star;
        }
        DesignParams wald = d;
        wald.mr2_mode = Mr2Mode::wald_lower_99;
        const Stage2Size a = recalc_stage2_n(0.2, 0.5, 0.95, d, 0.6, 0.9);
        const Stage2Size b = recalc_stage2_n(0.2, 0.5, 0.95, wald, 0.6, 0.9);
        CHECK(b.mr2_hat < a.mr2_hat);
        CHECK(b.n2_final >= a.n2_final);  // smaller rate estimate, larger n
    }
}

TEST_CASE("final_test") {
    DesignParams d;
    const FinalTest wk = final_test(0.5, 0.5, d);
    CHECK(wk.p_total == doctest::Approx(0.5));
    CHECK_FALSE(wk.reject);

    const FinalTest st = final_test(0.025, 0.025, d);
    CHECK(st.p_total == doctest::Approx(0.00279).epsilon(2e-3));
    CHECK(st.reject);

    // boundary: p1 with A(p1) = 0.5 paired with p2 slightly inside 0.5
    const double p1 = 1.0 - norm_cdf(norm_quantile(1.0 - d.alpha) / d.w1);
    const FinalTest boundary = final_test(p1 * (1.0 - 1e-9), 0.5, d);
    CHECK(boundary.p_total == doctest::Approx(d.alpha).epsilon(1e-6));
    CHECK(boundary.reject);
}

TEST_CASE("validate flags bad parameters by field") {
    DesignParams d;
    validate(d);  // defaults are sound
    d.w1 = 0.9;
    CHECK_THROWS_WITH_AS(validate(d), doctest::Contains("w1"), std::invalid_argument);
    d = DesignParams{};
    d.n2_max = 5;
    d.n2_min = 10;
    CHECK_THROWS_WITH_AS(validate(d), doctest::Contains("n2_max"), std::invalid_argument);
    d = DesignParams{};
    d.alpha = 0.75;
    CHECK_THROWS_WITH_AS(validate(d), doctest::Contains("alpha"), std::invalid_argument);
}

TEST_CASE("pi_t_planned recovers the planning response rate") {
    DesignParams d;
    CHECK(pi_t_planned(d) == doctest::Approx(0.5).epsilon(1e-12));
}
