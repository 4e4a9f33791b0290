#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hct/glm.hpp"
#include "hct/rng.hpp"
#include "hct/stats.hpp"

using namespace hct;

namespace {

DesignMatrix from_2x2(double a, double b, double c, double d) {
    DesignMatrix x({"intercept", "treat"});
    auto rows = [&x](double count, double treat, int y) {
        const double row[2] = {1.0, treat};
        for (int i = 0; i < static_cast<int>(count); ++i) x.push_row(row, y);
    };
    rows(a, 1.0, 1);
    rows(b, 1.0, 0);
    rows(c, 0.0, 1);
    rows(d, 0.0, 0);
    return x;
}

} // namespace

TEST_CASE("intercept-only fit equals the closed form") {
    DesignMatrix x({"intercept"});
    const double row[1] = {1.0};
    for (int i = 0; i < 30; ++i) x.push_row(row, 1);
    for (int i = 0; i < 70; ++i) x.push_row(row, 0);
    const FitResult fit = fit_logistic(x);
    REQUIRE(fit.converged);
    CHECK(fit.coefficients[0] == doctest::Approx(std::log(0.3 / 0.7)).epsilon(1e-9));
    CHECK(fit.standard_errors[0] ==
          doctest::Approx(std::sqrt(1.0 / 30 + 1.0 / 70)).epsilon(1e-9));
}

TEST_CASE("treatment-only fit reproduces the 2x2 closed form") {
    const FitResult fit = fit_logistic(from_2x2(15, 15, 9, 21));
    REQUIRE(fit.converged);
    const auto ref = log_odds_ratio_2x2({15, 15, 9, 21});
    CHECK(std::fabs(fit.coefficients[1] - ref.estimate) < 1e-6);
    CHECK(std::fabs(fit.standard_errors[1] - ref.se) < 1e-6);

    // the same equivalence on random nondegenerate tables
    RngStream s(31, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const double a = 2 + std::floor(20 * s.uniform01());
        const double b = 2 + std::floor(20 * s.uniform01());
        const double c = 2 + std::floor(20 * s.uniform01());
        const double d = 2 + std::floor(20 * s.uniform01());
        const FitResult f = fit_logistic(from_2x2(a, b, c, d));
        REQUIRE(f.converged);
        const auto r = log_odds_ratio_2x2({a, b, c, d});
        CHECK(std::fabs(f.coefficients[1] - r.estimate) < 1e-6);
        CHECK(std::fabs(f.standard_errors[1] - r.se) < 1e-6);
    }
}

TEST_CASE("degenerate response throws") {
    DesignMatrix x({"intercept"});
    const double row[1] = {1.0};
    for (int i = 0; i < 10; ++i) x.push_row(row, 1);
    CHECK_THROWS_AS(fit_logistic(x), std::invalid_argument);
}

TEST_CASE("response identical to a binary covariate is flagged as separated") {
    DesignMatrix x({"intercept", "z"});
    RngStream s(5, 0);
    for (int i = 0; i < 40; ++i) {
        const double z = draw_bernoulli(s, 0.5);
        const double row[2] = {1.0, z};
        x.push_row(row, static_cast<int>(z));
    }
    const FitResult fit = fit_logistic(x);
    CHECK(fit.separated);
    CHECK_FALSE(fit.converged);
}

TEST_CASE("separation detector agrees with the 1-d interval oracle") {
    // One continuous covariate: the ML estimate fails to exist exactly when
    // the classes are separated on the line.
    RngStream s(271828, 0);
    int separated_seen = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = 4 + static_cast<int>(s.uniform01() * 9);  // 4..12
        DesignMatrix x({"intercept", "z"});
        std::vector<double> z1, z0;
        bool force_sep = s.uniform01() < 0.4;
        for (int i = 0; i < n; ++i) {
            const int y = i < n / 2 ? 1 : 0;
            double z = draw_normal(s, 0.0, 1.0);
            if (force_sep) z = y ? 1.0 + s.uniform01() : -1.0 - s.uniform01();
            (y ? z1 : z0).push_back(z);
            const double row[2] = {1.0, z};
            x.push_row(row, y);
        }
        double min1 = 1e300, max1 = -1e300, min0 = 1e300, max0 = -1e300;
        for (double v : z1) {
            min1 = std::min(min1, v);
            max1 = std::max(max1, v);
        }
        for (double v : z0) {
            min0 = std::min(min0, v);
            max0 = std::max(max0, v);
        }
        const bool oracle_separated = (min1 > max0) || (min0 > max1);

        const FitResult fit = fit_logistic(x);
        if (oracle_separated) {
            ++separated_seen;
            CHECK(fit.separated);
            CHECK_FALSE(fit.converged);
        }
        // overlapping classes with at least two interior points per side
        // must fit cleanly
        const bool solid_overlap = z1.size() >= 2 && z0.size() >= 2 &&
                                   min1 < max0 - 1e-9 && min0 < max1 - 1e-9;
        if (solid_overlap) {
            CHECK(fit.converged);
            CHECK_FALSE(fit.separated);
        }
    }
    CHECK(separated_seen > 100);  // the generator actually exercised the branch
}

TEST_CASE("shifting a covariate moves only the intercept") {
    RngStream s(8, 1);
    DesignMatrix x({"intercept", "treat", "age"});
    DesignMatrix xs({"intercept", "treat", "age"});
    const double shift = 17.5;
    for (int i = 0; i < 200; ++i) {
        const double treat = i % 2;
        const double age = draw_normal(s, 55, 15);
        const int y = draw_bernoulli(s, expit(-0.5 + 0.8 * treat + 0.02 * (age - 55)));
        const double r1[3] = {1.0, treat, age};
        const double r2[3] = {1.0, treat, age + shift};
        x.push_row(r1, y);
        xs.push_row(r2, y);
    }
    const FitResult f = fit_logistic(x);
    const FitResult g = fit_logistic(xs);
    REQUIRE(f.converged);
    REQUIRE(g.converged);
    CHECK(g.coefficients[0] ==
          doctest::Approx(f.coefficients[0] - shift * f.coefficients[2]).epsilon(1e-8));
    for (int j = 1; j < 3; ++j) {
        CHECK(g.coefficients[j] == doctest::Approx(f.coefficients[j]).epsilon(1e-8));
        CHECK(g.standard_errors[j] == doctest::Approx(f.standard_errors[j]).epsilon(1e-8));
    }
}

TEST_CASE("log-likelihood is non-decreasing across IRLS steps") {
    RngStream s(400, 2);
    for (int rep = 0; rep < 20; ++rep) {
        DesignMatrix x({"intercept", "a", "b"});
        for (int i = 0; i < 60; ++i) {
            const double a = draw_normal(s, 0, 1), b = draw_normal(s, 0, 1);
            const int y = draw_bernoulli(s, expit(0.3 + 1.5 * a - 2.0 * b));
            const double row[3] = {1.0, a, b};
            x.push_row(row, y);
        }
        std::vector<double> trace;
        const FitResult fit = fit_logistic(x, &trace);
        REQUIRE(trace.size() >= 2);
        for (std::size_t k = 1; k < trace.size(); ++k)
            CHECK(trace[k] >= trace[k - 1] - 1e-9);
        if (fit.converged)
            for (double se : fit.standard_errors) CHECK(se > 0.0);
    }
}

TEST_CASE("constant column is aliased instead of failing the fit") {
    RngStream s(12, 0);
    DesignMatrix x({"intercept", "treat", "age", "cyto"});
    DesignMatrix ref({"intercept", "treat", "age"});
    for (int i = 0; i < 120; ++i) {
        const double treat = i < 12 ? 1.0 : 0.0;
        const double age = draw_normal(s, 55, 15);
        const int y = draw_bernoulli(s, expit(-0.7 + 0.9 * treat - 0.02 * (age - 55)));
        const double full[4] = {1.0, treat, age, 0.0};
        const double red[3] = {1.0, treat, age};
        x.push_row(full, y);
        ref.push_row(red, y);
    }
    const FitResult f = fit_logistic(x);
    const FitResult g = fit_logistic(ref);
    REQUIRE(f.converged);
    CHECK(f.coefficients[3] == 0.0);
    CHECK(std::isnan(f.standard_errors[3]));
    CHECK(f.coefficients[1] == doctest::Approx(g.coefficients[1]).epsilon(1e-10));
    CHECK(f.standard_errors[1] == doctest::Approx(g.standard_errors[1]).epsilon(1e-10));
}

TEST_CASE("wald_p_value") {
    const FitResult fit = fit_logistic(from_2x2(15, 15, 9, 21));
    REQUIRE(fit.converged);
    CHECK(wald_p_value(fit, 1, fit.coefficients[1]) == doctest::Approx(0.5));
    CHECK(wald_p_value(fit, 1, fit.coefficients[1] - 1.959964 * fit.standard_errors[1]) ==
          doctest::Approx(0.025).epsilon(1e-5));
    CHECK(wald_p_value(fit, 1, 0.0) == doctest::Approx(0.05846).epsilon(2e-4));

    FitResult bad;
    bad.converged = false;
    bad.coefficients = {0.0};
    bad.standard_errors = {1.0};
    CHECK_THROWS_AS(wald_p_value(bad, 0, 0.0), std::logic_error);
}
