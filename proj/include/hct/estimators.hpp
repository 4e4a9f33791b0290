#pragma once

namespace hct {

enum class MlWeightMode {
    normalized,  // weights mr1*n1 and mr2*n2, summing to one
    as_printed   // second weight n2/(mr1*n1 + mr2*n2), not normalized
};

// Stage-wise summary feeding the combined estimators. Stage II fields are
// ignored when the trial stopped at the interim.
struct StagePair {
    double theta1 = 0.0;
    double se1 = 0.0;
    double mr1 = 1.0;
    int n1 = 0;
    bool has_stage2 = false;
    double theta2 = 0.0;
    double se2 = 0.0;
    double mr2 = 1.0;
    int n2 = 0;
    double w1 = 0.0;
    double w2 = 0.0;
};

// Effective-sample-size weighted average of the stage estimates.
double estimate_ml(const StagePair& s, MlWeightMode mode = MlWeightMode::normalized);

// Fixed-weight convex combination omega*theta1 + (1-omega)*theta2.
double estimate_fwml(const StagePair& s, double omega);

// Adaptive weight (w1/se1)/(w1/se1 + w2/se2).
double estimate_awml(const StagePair& s);

// Lower bound of the one-sided (1-alpha) repeated confidence interval,
// centred on the adaptively weighted estimate for two-stage trials.
double repeated_ci_lower(const StagePair& s, double alpha);

} // namespace hct
