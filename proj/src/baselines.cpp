#include "sketchauth/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sketchauth/error.hpp"

namespace sketchauth {

namespace {

// Inverse of a symmetric positive definite matrix via Cholesky. Throws if not PD.
Mat5 spd_inverse(const Mat5& a) {
    constexpr std::size_t n = kFeatureCount;
    Mat5 l{};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(s > 0.0)) throw RuntimeFailure("fit_gaussian: covariance is not positive definite after ridge");
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // invert L, then A^-1 = L^-T L^-1
    Mat5 li{};
    for (std::size_t i = 0; i < n; ++i) {
        li[i][i] = 1.0 / l[i][i];
        for (std::size_t j = 0; j < i; ++j) {
            double s = 0.0;
            for (std::size_t k = j; k < i; ++k) s -= l[i][k] * li[k][j];
            li[i][j] = s / l[i][i];
        }
    }
    Mat5 inv{};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = std::max(i, j); k < n; ++k) s += li[k][i] * li[k][j];
            inv[i][j] = s;
        }
    }
    return inv;
}

} // namespace

GaussianModel fit_gaussian(std::span<const Vec5> train, double lambda) {
    constexpr std::size_t d = kFeatureCount;
    if (train.size() <= d) {
        throw ValidationError("fit_gaussian: need more samples than dimensions, got " + std::to_string(train.size()));
    }
    if (!(lambda > 0.0)) throw ValidationError("fit_gaussian: ridge lambda must be positive");
    GaussianModel m;
    m.ridge_lambda = lambda;
    const double n = static_cast<double>(train.size());
    for (const auto& x : train) {
        for (std::size_t j = 0; j < d; ++j) m.mean[j] += x[j];
    }
    for (double& v : m.mean) v /= n;
    for (const auto& x : train) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) m.covariance[i][j] += (x[i] - m.mean[i]) * (x[j] - m.mean[j]);
        }
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) m.covariance[i][j] /= n;
        trace += m.covariance[i][i];
    }
    m.ridge = trace > 0.0 ? lambda * trace / static_cast<double>(d) : lambda;
    Mat5 ridged = m.covariance;
    for (std::size_t i = 0; i < d; ++i) ridged[i][i] += m.ridge;
    m.precision = spd_inverse(ridged);
    return m;
}

double mahalanobis_score(const GaussianModel& model, const Vec5& x) {
    Vec5 diff{};
    for (std::size_t j = 0; j < kFeatureCount; ++j) diff[j] = x[j] - model.mean[j];
    double s = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        for (std::size_t j = 0; j < kFeatureCount; ++j) s += diff[i] * model.precision[i][j] * diff[j];
    }
    return s;
}

double default_rbf_gamma(std::span<const Vec5> train) {
    if (train.empty()) throw ValidationError("default_rbf_gamma: empty training set");
    const double n = static_cast<double>(train.size());
    double mean_var = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        double mu = 0.0;
        for (const auto& x : train) mu += x[j];
        mu /= n;
        double var = 0.0;
        for (const auto& x : train) var += (x[j] - mu) * (x[j] - mu);
        mean_var += var / n;
    }
    mean_var /= static_cast<double>(kFeatureCount);
    if (!(mean_var > 0.0)) return 1.0 / static_cast<double>(kFeatureCount);
    return 1.0 / (static_cast<double>(kFeatureCount) * mean_var);
}

double rbf_kernel(const Vec5& a, const Vec5& b, double gamma) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
    return std::exp(-gamma * d2);
}

std::vector<double> solve_ocsvm_dual(std::span<const Vec5> train, double nu, double gamma, const OcsvmOptions& opts,
                                     double* rho_out, int* iterations_out, double* violation_out) {
    if (train.empty()) throw ValidationError("fit_ocsvm: empty training set");
    if (!(nu > 0.0 && nu <= 1.0)) throw ValidationError("fit_ocsvm: nu must be in (0,1]");
    if (!(gamma > 0.0)) throw ValidationError("fit_ocsvm: gamma must be positive");

    const std::size_t n = train.size();
    const double upper = 1.0 / (nu * static_cast<double>(n));
    std::vector<double> q(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) q[i * n + j] = rbf_kernel(train[i], train[j], gamma);
    }

    std::vector<double> alpha(n, 0.0);
    double remaining = 1.0;
    for (std::size_t i = 0; i < n && remaining > 0.0; ++i) {
        alpha[i] = std::min(upper, remaining);
        remaining -= alpha[i];
    }
    std::vector<double> grad(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) grad[i] += q[i * n + j] * alpha[j];
    }

    constexpr double kTau = 1e-12;
    int iter = 0;
    double violation = 0.0;
    while (true) {
        // i: most violating index that may grow; j: second-order choice among those that may shrink
        double gmax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t i = -1;
        for (std::size_t t = 0; t < n; ++t) {
            if (alpha[t] < upper && -grad[t] >= gmax) {
                gmax = -grad[t];
                i = static_cast<std::ptrdiff_t>(t);
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t j = -1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            if (!(alpha[t] > 0.0)) continue;
            gmax2 = std::max(gmax2, grad[t]);
            if (i < 0) continue;
            const double b = gmax + grad[t];
            if (b > 0.0) {
                const auto ii = static_cast<std::size_t>(i);
                double a = q[ii * n + ii] + q[t * n + t] - 2.0 * q[ii * n + t];
                if (a <= 0.0) a = kTau;
                const double val = -(b * b) / a;
                if (val <= best) {
                    best = val;
                    j = static_cast<std::ptrdiff_t>(t);
                }
            }
        }
        violation = (i < 0) ? 0.0 : std::max(0.0, gmax + gmax2);
        if (i < 0 || j < 0 || violation < opts.tolerance) break;
        if (++iter > opts.max_iterations) {
            throw RuntimeFailure("fit_ocsvm: no convergence within " + std::to_string(opts.max_iterations) +
                                 " iterations (violation " + std::to_string(violation) + ")");
        }

        const auto ii = static_cast<std::size_t>(i);
        const auto jj = static_cast<std::size_t>(j);
        double quad = q[ii * n + ii] + q[jj * n + jj] - 2.0 * q[ii * n + jj];
        if (quad <= 0.0) quad = kTau;
        const double old_i = alpha[ii];
        const double old_j = alpha[jj];
        const double delta = (grad[ii] - grad[jj]) / quad;
        const double sum = old_i + old_j;
        double ai = old_i - delta;
        double aj = old_j + delta;
        if (sum > upper) {
            if (ai > upper) {
                ai = upper;
                aj = sum - upper;
            }
        } else if (aj < 0.0) {
            aj = 0.0;
            ai = sum;
        }
        if (sum > upper) {
            if (aj > upper) {
                aj = upper;
                ai = sum - upper;
            }
        } else if (ai < 0.0) {
            ai = 0.0;
            aj = sum;
        }
        alpha[ii] = ai;
        alpha[jj] = aj;
        const double di = ai - old_i;
        const double dj = aj - old_j;
        for (std::size_t t = 0; t < n; ++t) grad[t] += q[t * n + ii] * di + q[t * n + jj] * dj;
    }

    // offset from free variables, or the midpoint of the feasible interval
    double free_sum = 0.0;
    std::size_t n_free = 0;
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] >= upper) {
            lb = std::max(lb, grad[t]);
        } else if (alpha[t] <= 0.0) {
            ub = std::min(ub, grad[t]);
        } else {
            free_sum += grad[t];
            ++n_free;
        }
    }
    double rho = 0.0;
    if (n_free > 0) {
        rho = free_sum / static_cast<double>(n_free);
    } else if (std::isfinite(ub) && std::isfinite(lb)) {
        rho = 0.5 * (ub + lb);
    } else {
        rho = std::isfinite(ub) ? ub : lb;
    }
    if (rho_out) *rho_out = rho;
    if (iterations_out) *iterations_out = iter;
    if (violation_out) *violation_out = violation;
    return alpha;
}

OcsvmModel fit_ocsvm(std::span<const Vec5> train, double nu, double gamma, const OcsvmOptions& opts) {
    OcsvmModel m;
    m.nu = nu;
    m.gamma = gamma;
    const auto alpha = solve_ocsvm_dual(train, nu, gamma, opts, &m.rho, &m.iterations, &m.kkt_violation);
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (alpha[i] > 0.0) {
            m.support_vectors.push_back(train[i]);
            m.alpha.push_back(alpha[i]);
        }
    }
    return m;
}

double ocsvm_dual_objective(const OcsvmModel& model) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.alpha.size(); ++i) {
        for (std::size_t j = 0; j < model.alpha.size(); ++j) {
            s += model.alpha[i] * model.alpha[j] *
                 rbf_kernel(model.support_vectors[i], model.support_vectors[j], model.gamma);
        }
    }
    return 0.5 * s;
}

double ocsvm_score(const OcsvmModel& model, const Vec5& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.alpha.size(); ++i) {
        s += model.alpha[i] * rbf_kernel(x, model.support_vectors[i], model.gamma);
    }
    return model.rho - s;
}

} // namespace sketchauth
