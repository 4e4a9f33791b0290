#pragma once

namespace hct {

// Standard normal CDF. Absolute error well below 1e-14; saturates to 0/1
// in the far tails.
double norm_cdf(double x);

// Standard normal quantile on (0,1) (Wichura's AS241 rational
// approximation, accurate to ~1 part in 1e15). Throws std::domain_error
// outside (0,1).
double norm_quantile(double p);

double expit(double x);
double logit(double p);

struct TwoByTwoTable {
    double responders_t = 0;
    double nonresponders_t = 0;
    double responders_c = 0;
    double nonresponders_c = 0;

    double total() const {
        return responders_t + nonresponders_t + responders_c + nonresponders_c;
    }
};

struct LogOddsRatio {
    double estimate;
    double se;
};

// Woolf estimate log(ad/bc) with se = sqrt(1/a + 1/b + 1/c + 1/d).
// All four cells must be positive; a zero cell throws std::domain_error
// (no continuity correction here, the caller decides how to handle it).
LogOddsRatio log_odds_ratio_2x2(const TwoByTwoTable& t);

} // namespace hct
