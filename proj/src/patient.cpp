#include "hct/patient.hpp"

#include "hct/stats.hpp"

namespace hct {

double linear_predictor(const OutcomeModel& m, double age, int cyto, bool treated,
                        double epsilon) {
    return m.beta0 + (treated ? m.theta : 0.0) + m.beta_age * age +
           m.beta_cyto * cyto + epsilon;
}

double response_probability(const OutcomeModel& m, double age, int cyto, bool treated,
                            double epsilon) {
    return expit(linear_predictor(m, age, cyto, treated, epsilon));
}

Patient generate_patient(RngStream& s, const OutcomeModel& m, bool treated, int id) {
    Patient p;
    p.id = id;
    p.treated = treated;
    p.age = draw_normal(s, m.age_mean, m.age_sd);
    p.cyto = draw_bernoulli(s, m.cyto_prev);
    p.epsilon = draw_normal(s, 0.0, m.sigma);
    p.response = draw_bernoulli(s, response_probability(m, p.age, p.cyto, treated, p.epsilon));
    return p;
}

std::vector<Patient> generate_pool(RngStream& s, const OutcomeModel& m, int n) {
    std::vector<Patient> pool;
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.push_back(generate_patient(s, m, false, i));
    return pool;
}

} // namespace hct
