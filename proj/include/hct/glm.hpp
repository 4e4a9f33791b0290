#pragma once

#include <span>
#include <string>
#include <vector>

namespace hct {

// Row-major design matrix with a binary response. Columns carry names so
// callers can look up coefficients by covariate instead of by index.
class DesignMatrix {
public:
    explicit DesignMatrix(std::vector<std::string> column_names)
        : names_(std::move(column_names)), p_(static_cast<int>(names_.size())) {}

    void reserve(int rows) {
        x_.reserve(static_cast<std::size_t>(rows) * p_);
        y_.reserve(rows);
    }

    void push_row(std::span<const double> row, int response);

    int n() const { return n_; }
    int p() const { return p_; }
    const double* row(int i) const { return x_.data() + static_cast<std::size_t>(i) * p_; }
    int response(int i) const { return y_[i]; }
    const std::vector<std::string>& names() const { return names_; }

    // Index of a named column, -1 if absent.
    int column_index(const std::string& name) const;

private:
    std::vector<std::string> names_;
    std::vector<double> x_;
    std::vector<int> y_;
    int p_ = 0;
    int n_ = 0;
};

struct FitResult {
    std::vector<double> coefficients;
    std::vector<double> standard_errors;
    bool converged = false;
    bool separated = false;
    int iterations = 0;
    double log_likelihood = 0.0;
};

// Maximum-likelihood logistic regression via iteratively reweighted least
// squares with step-halving. Converged means max |score| <= 1e-8 within
// 100 iterations. Perfect or quasi-complete separation is reported through
// FitResult::separated (converged stays false) rather than an exception.
// Throws std::invalid_argument for an all-0/all-1 response or n < p.
//
// ll_trace, when given, receives the log-likelihood after every accepted
// IRLS step (test instrumentation).
FitResult fit_logistic(const DesignMatrix& x, std::vector<double>* ll_trace = nullptr);

// One-sided (greater) Wald p-value 1 - Phi((coef - null_value)/se).
// Requires a converged fit.
double wald_p_value(const FitResult& fit, int coefficient_index, double null_value);

} // namespace hct
