#include "hct/rng.hpp"

#include "hct/stats.hpp"

namespace hct {

double draw_normal(RngStream& s, double mean, double sd) {
    const double z = norm_quantile(s.uniform01());
    return mean + sd * z;
}

int draw_bernoulli(RngStream& s, double p) {
    return s.uniform01() < p ? 1 : 0;
}

} // namespace hct
