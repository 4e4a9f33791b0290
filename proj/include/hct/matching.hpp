#pragma once

#include <stdexcept>
#include <vector>

#include "hct/patient.hpp"

namespace hct {

enum class MatchCovariate { age, cyto };

struct MatchingInfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScoredPatient {
    int id;
    double score;  // logit-scale propensity
};

struct PropensityScores {
    std::vector<ScoredPatient> intervention;
    std::vector<ScoredPatient> controls;
    double pooled_sd = 0.0;  // SD of scores over all patients supplied
};

struct MatchedSet {
    int intervention_id;
    std::vector<int> control_ids;  // exactly M, all within the caliper
};

struct MatchResult {
    int m = 0;
    std::vector<MatchedSet> matched_sets;
    std::vector<int> unmatched_intervention_ids;
    double matching_rate = 0.0;  // matched / offered
};

// Logistic fit of group membership (intervention = 1) on the requested
// covariates; returns the linear predictor for every patient plus the
// pooled score SD used for the caliper. Throws MatchingInfeasibleError if
// the group label is separable from the covariates.
PropensityScores estimate_propensity(
    const std::vector<Patient>& intervention, const std::vector<Patient>& controls,
    const std::vector<MatchCovariate>& covariates = {MatchCovariate::age,
                                                     MatchCovariate::cyto});

// Greedy 1:M nearest-neighbour matching without replacement on the logit
// scale. Intervention patients are processed in descending score order
// (ties by lower id); each takes its M nearest available controls, all
// within caliper = caliper_multiplier * pooled_sd, or is left unmatched
// with its tentative picks released. Distance ties between controls break
// toward the lower control id. A pooled SD of zero disables the caliper.
MatchResult match_one_to_m(const PropensityScores& scores, int m,
                           double caliper_multiplier = 0.2);

struct MDetermination {
    int m = 1;
    MatchResult result;
    double mr_1to1 = 0.0;
};

// Iterative choice of the number of matching partners: starting from the
// 1:1 rate, M grows while the 1:M rate stays >= mr_1:1 - tau, capped at
// m_max; if already 1:2 fails the criterion, M stays 1.
MDetermination determine_m(const PropensityScores& scores, double tau, int m_max,
                           double caliper_multiplier = 0.2);

// floor(pool size / maximal trial size), at least 1.
int m_max_from_pool(long n_controls, long max_trial_patients);

} // namespace hct
