#include "hct/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hct/glm.hpp"
#include "hct/stats.hpp"

namespace hct {

namespace {

double covariate_value(const Patient& p, MatchCovariate c) {
    switch (c) {
        case MatchCovariate::age: return p.age;
        case MatchCovariate::cyto: return static_cast<double>(p.cyto);
    }
    return 0.0;
}

const char* covariate_name(MatchCovariate c) {
    switch (c) {
        case MatchCovariate::age: return "age";
        case MatchCovariate::cyto: return "cyto";
    }
    return "?";
}

// Matching problem prepared once so that determine_m can re-run the greedy
// pass for several M without re-sorting.
struct SortedProblem {
    int n = 0;                    // number of controls
    std::vector<double> cscore;   // controls sorted by (score, id)
    std::vector<int> cid;
    std::vector<double> iscore;   // intervention, original order
    std::vector<int> iid;
    std::vector<int> iorder;      // processing order: descending score, ties by id
    std::vector<int> istart;      // first sorted control position with score >= target
    double caliper = std::numeric_limits<double>::infinity();
};

SortedProblem prepare(const PropensityScores& scores, double caliper_multiplier) {
    SortedProblem pr;
    pr.n = static_cast<int>(scores.controls.size());

    std::vector<int> order(pr.n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& ca = scores.controls[a];
        const auto& cb = scores.controls[b];
        if (ca.score != cb.score) return ca.score < cb.score;
        return ca.id < cb.id;
    });
    pr.cscore.resize(pr.n);
    pr.cid.resize(pr.n);
    for (int k = 0; k < pr.n; ++k) {
        pr.cscore[k] = scores.controls[order[k]].score;
        pr.cid[k] = scores.controls[order[k]].id;
    }

    const int ni = static_cast<int>(scores.intervention.size());
    pr.iscore.resize(ni);
    pr.iid.resize(ni);
    for (int k = 0; k < ni; ++k) {
        pr.iscore[k] = scores.intervention[k].score;
        pr.iid[k] = scores.intervention[k].id;
    }
    pr.iorder.resize(ni);
    std::iota(pr.iorder.begin(), pr.iorder.end(), 0);
    std::sort(pr.iorder.begin(), pr.iorder.end(), [&](int a, int b) {
        if (pr.iscore[a] != pr.iscore[b]) return pr.iscore[a] > pr.iscore[b];
        return pr.iid[a] < pr.iid[b];
    });
    pr.istart.resize(ni);
    for (int k = 0; k < ni; ++k) {
        pr.istart[k] = static_cast<int>(
            std::lower_bound(pr.cscore.begin(), pr.cscore.end(), pr.iscore[k]) -
            pr.cscore.begin());
    }

    // All scores identical means no confounding signal; every control is an
    // eligible match.
    if (scores.pooled_sd > 0.0)
        pr.caliper = caliper_multiplier * scores.pooled_sd;
    return pr;
}

// Availability with path-compressed jumps to the next/previous free slot.
struct Availability {
    int n;
    std::vector<char> avail;
    std::vector<int> jump_next;  // candidate for first available >= i
    std::vector<int> jump_prev;  // candidate for last available <= i

    explicit Availability(int n_) : n(n_), avail(n_, 1), jump_next(n_), jump_prev(n_) {
        std::iota(jump_next.begin(), jump_next.end(), 0);
        std::iota(jump_prev.begin(), jump_prev.end(), 0);
    }

    int find_next(int i) {
        int j = i;
        while (j < n && !avail[j]) j = std::max(jump_next[j], j + 1);
        if (j > n) j = n;
        while (i < j && i >= 0) {
            const int t = std::max(jump_next[i], i + 1);
            jump_next[i] = j;
            i = t;
        }
        return j;
    }

    int find_prev(int i) {
        int j = i;
        while (j >= 0 && !avail[j]) j = std::min(jump_prev[j], j - 1);
        if (j < -1) j = -1;
        while (i > j && i < n) {
            const int t = std::min(jump_prev[i], i - 1);
            jump_prev[i] = j;
            i = t;
        }
        return j;
    }

    void take(int i) { avail[i] = 0; }
};

MatchResult run_match(const SortedProblem& pr, int m) {
    MatchResult res;
    res.m = m;
    const int offered = static_cast<int>(pr.iscore.size());
    res.matched_sets.reserve(offered);

    Availability av(pr.n);
    std::vector<int> picks;
    std::vector<int> group;
    picks.reserve(m);

    for (int p : pr.iorder) {
        const double t = pr.iscore[p];
        picks.clear();
        int left = av.find_prev(pr.istart[p] - 1);
        int right = av.find_next(pr.istart[p]);
        int need = m;
        bool feasible = true;

        while (need > 0) {
            const double dl = left >= 0 ? t - pr.cscore[left]
                                        : std::numeric_limits<double>::infinity();
            const double dr = right < pr.n ? pr.cscore[right] - t
                                           : std::numeric_limits<double>::infinity();
            const double d = std::min(dl, dr);
            // an infinite distance means both sides are exhausted, which an
            // infinite caliper must not wave through
            if (!std::isfinite(d) || !(d <= pr.caliper)) {
                feasible = false;
                break;
            }
            // Gather every available control at distance d (a run of equal
            // scores on either side, or both when the distances tie) so
            // that id tie-breaking sees the whole group.
            group.clear();
            int new_left = left, new_right = right;
            if (dl == d) {
                const double s = pr.cscore[left];
                int j = left;
                while (j >= 0 && pr.cscore[j] == s) {
                    group.push_back(j);
                    j = av.find_prev(j - 1);
                }
                new_left = j;
            }
            if (dr == d) {
                const double s = pr.cscore[right];
                int j = right;
                while (j < pr.n && pr.cscore[j] == s) {
                    group.push_back(j);
                    j = av.find_next(j + 1);
                }
                new_right = j;
            }
            if (static_cast<int>(group.size()) <= need) {
                picks.insert(picks.end(), group.begin(), group.end());
                need -= static_cast<int>(group.size());
                left = new_left;
                right = new_right;
            } else {
                std::nth_element(group.begin(), group.begin() + need, group.end(),
                                 [&](int a, int b) { return pr.cid[a] < pr.cid[b]; });
                picks.insert(picks.end(), group.begin(), group.begin() + need);
                need = 0;
            }
        }

        if (feasible && need == 0) {
            for (int k : picks) av.take(k);
            MatchedSet set;
            set.intervention_id = pr.iid[p];
            set.control_ids.reserve(m);
            for (int k : picks) set.control_ids.push_back(pr.cid[k]);
            std::sort(set.control_ids.begin(), set.control_ids.end());
            res.matched_sets.push_back(std::move(set));
        } else {
            // Partial sets are discarded; the tentatively gathered controls
            // were never taken, so they stay available for later patients.
            res.unmatched_intervention_ids.push_back(pr.iid[p]);
        }
    }

    std::sort(res.matched_sets.begin(), res.matched_sets.end(),
              [](const MatchedSet& a, const MatchedSet& b) {
                  return a.intervention_id < b.intervention_id;
              });
    std::sort(res.unmatched_intervention_ids.begin(),
              res.unmatched_intervention_ids.end());
    res.matching_rate =
        offered > 0 ? static_cast<double>(res.matched_sets.size()) / offered : 0.0;
    return res;
}

} // namespace

PropensityScores estimate_propensity(const std::vector<Patient>& intervention,
                                     const std::vector<Patient>& controls,
                                     const std::vector<MatchCovariate>& covariates) {
    if (intervention.empty() || controls.empty())
        throw std::invalid_argument("estimate_propensity: both groups must be nonempty");

    std::vector<std::string> names{"intercept"};
    for (MatchCovariate c : covariates) names.emplace_back(covariate_name(c));
    DesignMatrix x(std::move(names));
    x.reserve(static_cast<int>(intervention.size() + controls.size()));

    std::vector<double> row(1 + covariates.size());
    row[0] = 1.0;
    auto push = [&](const Patient& p, int label) {
        for (std::size_t j = 0; j < covariates.size(); ++j)
            row[j + 1] = covariate_value(p, covariates[j]);
        x.push_row(row, label);
    };
    for (const Patient& p : intervention) push(p, 1);
    for (const Patient& p : controls) push(p, 0);

    FitResult fit = fit_logistic(x);
    if (fit.separated)
        throw MatchingInfeasibleError(
            "estimate_propensity: group membership separable from covariates");
    if (!fit.converged)
        throw MatchingInfeasibleError("estimate_propensity: propensity fit failed");

    PropensityScores scores;
    scores.intervention.reserve(intervention.size());
    scores.controls.reserve(controls.size());
    double sum = 0.0, sumsq = 0.0;
    auto score_of = [&](const Patient& p) {
        double e = fit.coefficients[0];
        for (std::size_t j = 0; j < covariates.size(); ++j)
            e += fit.coefficients[j + 1] * covariate_value(p, covariates[j]);
        sum += e;
        sumsq += e * e;
        return e;
    };
    for (const Patient& p : intervention)
        scores.intervention.push_back({p.id, score_of(p)});
    for (const Patient& p : controls) scores.controls.push_back({p.id, score_of(p)});

    const double n = static_cast<double>(intervention.size() + controls.size());
    if (n > 1.5) {
        const double var = (sumsq - sum * sum / n) / (n - 1.0);
        scores.pooled_sd = var > 0.0 ? std::sqrt(var) : 0.0;
    }
    return scores;
}

MatchResult match_one_to_m(const PropensityScores& scores, int m,
                           double caliper_multiplier) {
    if (m < 1) throw std::invalid_argument("match_one_to_m: m must be >= 1");
    return run_match(prepare(scores, caliper_multiplier), m);
}

MDetermination determine_m(const PropensityScores& scores, double tau, int m_max,
                           double caliper_multiplier) {
    if (m_max < 1) throw std::invalid_argument("determine_m: m_max must be >= 1");
    const SortedProblem pr = prepare(scores, caliper_multiplier);

    MDetermination det;
    det.result = run_match(pr, 1);
    det.m = 1;
    det.mr_1to1 = det.result.matching_rate;
    for (int m = 2; m <= m_max; ++m) {
        MatchResult r = run_match(pr, m);
        if (r.matching_rate < det.mr_1to1 - tau - 1e-12) break;
        det.m = m;
        det.result = std::move(r);
    }
    return det;
}

int m_max_from_pool(long n_controls, long max_trial_patients) {
    if (n_controls <= 0 || max_trial_patients <= 0)
        throw std::invalid_argument("m_max_from_pool: counts must be positive");
    const long m = n_controls / max_trial_patients;
    return static_cast<int>(m < 1 ? 1 : m);
}

} // namespace hct
