#pragma once

#include <vector>

#include "hct/rng.hpp"

namespace hct {

struct Patient {
    int id = 0;
    double age = 0.0;
    int cyto = 0;          // high-risk cytogenetics indicator
    bool treated = false;
    int response = 0;
    double epsilon = 0.0;  // latent per-patient residual on the logit scale
};

// Data-generating outcome model
//   Logit(Y) = beta0 + theta*treated + beta_age*age + beta_cyto*cyto + eps,
// age ~ N(age_mean, age_sd^2), cyto ~ Ber(cyto_prev), eps ~ N(0, sigma^2).
struct OutcomeModel {
    double beta0 = 2.0;
    double theta = 0.0;        // treatment log odds ratio
    double beta_age = -0.05;   // per year
    double beta_cyto = -0.5;
    double sigma = 0.0;        // residual SD
    double age_mean = 55.0;
    double age_sd = 15.0;
    double cyto_prev = 0.34;
};

double linear_predictor(const OutcomeModel& m, double age, int cyto, bool treated,
                        double epsilon);
double response_probability(const OutcomeModel& m, double age, int cyto, bool treated,
                            double epsilon);

// Draw order per patient is fixed (age, cyto, eps, response) so that a
// stream replays identically.
Patient generate_patient(RngStream& s, const OutcomeModel& m, bool treated, int id);

// Historical control pool; ids 0..n-1.
std::vector<Patient> generate_pool(RngStream& s, const OutcomeModel& m, int n);

} // namespace hct
