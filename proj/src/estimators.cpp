#include "hct/estimators.hpp"

#include <stdexcept>

#include "hct/stats.hpp"

namespace hct {

double estimate_ml(const StagePair& s, MlWeightMode mode) {
    if (!s.has_stage2) return s.theta1;
    const double e1 = s.mr1 * s.n1;
    const double e2 = s.mr2 * s.n2;
    const double denom = e1 + e2;
    if (mode == MlWeightMode::as_printed)
        return (e1 * s.theta1 + static_cast<double>(s.n2) * s.theta2) / denom;
    return (e1 * s.theta1 + e2 * s.theta2) / denom;
}

double estimate_fwml(const StagePair& s, double omega) {
    if (!(omega > 0.0 && omega < 1.0))
        throw std::invalid_argument("estimate_fwml: omega must lie in (0, 1)");
    if (!s.has_stage2) return s.theta1;
    return omega * s.theta1 + (1.0 - omega) * s.theta2;
}

double estimate_awml(const StagePair& s) {
    if (!s.has_stage2) return s.theta1;
    const double a = s.w1 / s.se1;
    const double b = s.w2 / s.se2;
    const double omega = a / (a + b);
    return omega * s.theta1 + (1.0 - omega) * s.theta2;
}

double repeated_ci_lower(const StagePair& s, double alpha) {
    const double z = norm_quantile(1.0 - alpha);
    if (!s.has_stage2) return s.theta1 - z * s.se1;
    return estimate_awml(s) - z / (s.w1 / s.se1 + s.w2 / s.se2);
}

} // namespace hct
