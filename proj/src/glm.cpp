#include "hct/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hct/stats.hpp"

namespace hct {

void DesignMatrix::push_row(std::span<const double> row, int response) {
    if (static_cast<int>(row.size()) != p_)
        throw std::invalid_argument("DesignMatrix::push_row: wrong row width");
    x_.insert(x_.end(), row.begin(), row.end());
    y_.push_back(response != 0 ? 1 : 0);
    ++n_;
}

int DesignMatrix::column_index(const std::string& name) const {
    for (int j = 0; j < p_; ++j)
        if (names_[j] == name) return j;
    return -1;
}

namespace {

constexpr double kGradTol = 1e-8;
constexpr int kMaxIter = 100;
constexpr double kBigCoef = 10.0;
constexpr double kSaturationTol = 1e-6;

// log(1 + exp(z)) without overflow.
double log1pexp(double z) {
    if (z > 35.0) return z;
    if (z < -35.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

double log_likelihood(const DesignMatrix& x, const std::vector<double>& beta,
                      std::vector<double>& eta) {
    const int n = x.n(), p = x.p();
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* r = x.row(i);
        double e = 0.0;
        for (int j = 0; j < p; ++j) e += r[j] * beta[j];
        eta[i] = e;
        ll += x.response(i) ? -log1pexp(-e) : -log1pexp(e);
    }
    return ll;
}

// Cholesky factorisation in place (lower triangle); false if not positive
// definite.
bool cholesky(std::vector<double>& a, int p) {
    for (int j = 0; j < p; ++j) {
        double d = a[j * p + j];
        for (int k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
        if (!(d > 0.0)) return false;
        const double l = std::sqrt(d);
        a[j * p + j] = l;
        for (int i = j + 1; i < p; ++i) {
            double s = a[i * p + j];
            for (int k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
            a[i * p + j] = s / l;
        }
    }
    return true;
}

void cholesky_solve(const std::vector<double>& l, int p, std::vector<double>& b) {
    for (int i = 0; i < p; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= l[i * p + k] * b[k];
        b[i] = s / l[i * p + i];
    }
    for (int i = p - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < p; ++k) s -= l[k * p + i] * b[k];
        b[i] = s / l[i * p + i];
    }
}

// Diagonal of (L L^T)^(-1) by solving for unit vectors.
void cholesky_inverse_diag(const std::vector<double>& l, int p, std::vector<double>& diag) {
    std::vector<double> e(p);
    diag.assign(p, 0.0);
    for (int j = 0; j < p; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        cholesky_solve(l, p, e);
        diag[j] = e[j];
    }
}

// Fitted probabilities saturated at 0/1 across a whole response class: the
// signature of complete separation. A fit where only a subgroup saturates
// (for example every treated patient responding) still has a usable
// likelihood surface and is reported as converged with a large coefficient
// and standard error, which is how reference GLM implementations behave.
bool looks_separated(const DesignMatrix& x, const std::vector<double>& eta) {
    bool ones_saturated = true, zeros_saturated = true;
    for (int i = 0; i < x.n(); ++i) {
        const double mu = expit(eta[i]);
        if (x.response(i)) {
            if (mu < 1.0 - kSaturationTol) ones_saturated = false;
        } else {
            if (mu > kSaturationTol) zeros_saturated = false;
        }
        if (!ones_saturated && !zeros_saturated) return false;
    }
    return ones_saturated || zeros_saturated;
}

} // namespace

namespace {

// Columns linearly dependent on earlier ones (detected by pivoted Cholesky
// of the Gram matrix). Such columns are aliased out of the fit the way
// reference GLM implementations drop them, instead of failing the model.
std::vector<int> aliased_columns(const DesignMatrix& x) {
    const int n = x.n(), p = x.p();
    std::vector<double> g(p * p, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* r = x.row(i);
        for (int j = 0; j < p; ++j)
            for (int k = 0; k <= j; ++k) g[j * p + k] += r[j] * r[k];
    }
    std::vector<int> aliased;
    std::vector<double> l(p * p, 0.0);
    for (int j = 0; j < p; ++j) {
        double d = g[j * p + j];
        for (int k = 0; k < j; ++k) d -= l[j * p + k] * l[j * p + k];
        if (!(d > 1e-10 * (g[j * p + j] + 1.0))) {
            aliased.push_back(j);
            continue;  // leave this row of L zero
        }
        l[j * p + j] = std::sqrt(d);
        for (int i = j + 1; i < p; ++i) {
            double s = g[i * p + j];
            for (int k = 0; k < j; ++k) s -= l[i * p + k] * l[j * p + k];
            l[i * p + j] = s / l[j * p + j];
        }
    }
    return aliased;
}

} // namespace

FitResult fit_logistic(const DesignMatrix& x, std::vector<double>* ll_trace) {
    const int n = x.n(), p = x.p();
    if (p < 1) throw std::invalid_argument("fit_logistic: empty design matrix");
    if (n < p) throw std::invalid_argument("fit_logistic: fewer rows than columns");
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += x.response(i);
    if (ones == 0 || ones == n)
        throw std::invalid_argument("fit_logistic: degenerate response (all 0 or all 1)");

    if (const std::vector<int> aliased = aliased_columns(x); !aliased.empty()) {
        std::vector<int> kept;
        for (int j = 0; j < p; ++j) {
            bool drop = false;
            for (int a : aliased) drop = drop || a == j;
            if (!drop) kept.push_back(j);
        }
        std::vector<std::string> names;
        for (int j : kept) names.push_back(x.names()[j]);
        DesignMatrix reduced(std::move(names));
        reduced.reserve(n);
        std::vector<double> row(kept.size());
        for (int i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < kept.size(); ++k) row[k] = x.row(i)[kept[k]];
            reduced.push_row(row, x.response(i));
        }
        FitResult sub = fit_logistic(reduced, ll_trace);
        FitResult fit = sub;
        fit.coefficients.assign(p, 0.0);
        fit.standard_errors.assign(p, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t k = 0; k < kept.size(); ++k) {
            fit.coefficients[kept[k]] = sub.coefficients[k];
            fit.standard_errors[kept[k]] = sub.standard_errors[k];
        }
        return fit;
    }

    FitResult fit;
    fit.coefficients.assign(p, 0.0);
    fit.standard_errors.assign(p, 0.0);

    std::vector<double> eta(n), grad(p), hess(p * p), step(p), candidate(p), eta_cand(n);
    double ll = log_likelihood(x, fit.coefficients, eta);
    if (ll_trace) ll_trace->push_back(ll);

    bool solver_failed = false;
    for (int iter = 1; iter <= kMaxIter; ++iter) {
        fit.iterations = iter;

        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(hess.begin(), hess.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            const double* r = x.row(i);
            const double mu = expit(eta[i]);
            const double resid = x.response(i) - mu;
            const double w = mu * (1.0 - mu);
            for (int j = 0; j < p; ++j) {
                grad[j] += r[j] * resid;
                for (int k = 0; k <= j; ++k) hess[j * p + k] += w * r[j] * r[k];
            }
        }
        for (int j = 0; j < p; ++j)
            for (int k = j + 1; k < p; ++k) hess[j * p + k] = hess[k * p + j];

        double gmax = 0.0;
        for (int j = 0; j < p; ++j) gmax = std::max(gmax, std::fabs(grad[j]));
        if (gmax <= kGradTol) {
            // The score also vanishes when the fit runs off to infinity, so
            // a small gradient at huge coefficients means separation, not
            // convergence.
            double cmax = 0.0;
            for (double b : fit.coefficients) cmax = std::max(cmax, std::fabs(b));
            if (cmax > kBigCoef && looks_separated(x, eta))
                fit.separated = true;
            else
                fit.converged = true;
            break;
        }

        std::vector<double> chol = hess;
        if (!cholesky(chol, p)) {
            solver_failed = true;
            break;
        }
        step = grad;
        cholesky_solve(chol, p, step);

        // Step-halve until the likelihood does not decrease.
        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h) {
            for (int j = 0; j < p; ++j) candidate[j] = fit.coefficients[j] + scale * step[j];
            const double ll_new = log_likelihood(x, candidate, eta_cand);
            if (ll_new >= ll - 1e-12) {
                fit.coefficients = candidate;
                eta = eta_cand;
                ll = ll_new;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            solver_failed = true;
            break;
        }
        if (ll_trace) ll_trace->push_back(ll);
    }

    fit.log_likelihood = ll;

    if (!fit.converged) {
        if (!fit.separated && (solver_failed || fit.iterations >= kMaxIter))
            fit.separated = looks_separated(x, eta);
        return fit;
    }

    // Wald standard errors from the inverse observed information.
    {
        std::vector<double> hess2(p * p, 0.0);
        for (int i = 0; i < n; ++i) {
            const double* r = x.row(i);
            const double mu = expit(eta[i]);
            const double w = mu * (1.0 - mu);
            for (int j = 0; j < p; ++j)
                for (int k = 0; k <= j; ++k) hess2[j * p + k] += w * r[j] * r[k];
        }
        for (int j = 0; j < p; ++j)
            for (int k = j + 1; k < p; ++k) hess2[j * p + k] = hess2[k * p + j];
        if (cholesky(hess2, p)) {
            std::vector<double> diag;
            cholesky_inverse_diag(hess2, p, diag);
            for (int j = 0; j < p; ++j) fit.standard_errors[j] = std::sqrt(diag[j]);
        } else {
            // Converged gradient but singular information: saturated fit.
            fit.converged = false;
            fit.separated = looks_separated(x, eta);
        }
    }
    return fit;
}

double wald_p_value(const FitResult& fit, int coefficient_index, double null_value) {
    if (!fit.converged)
        throw std::logic_error("wald_p_value: fit did not converge");
    const double coef = fit.coefficients.at(coefficient_index);
    const double se = fit.standard_errors.at(coefficient_index);
    return 1.0 - norm_cdf((coef - null_value) / se);
}

} // namespace hct
