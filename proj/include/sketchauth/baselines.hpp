#pragma once

#include <array>
#include <span>
#include <vector>

#include "sketchauth/features.hpp"

namespace sketchauth {

using Mat5 = std::array<std::array<double, kFeatureCount>, kFeatureCount>;

struct GaussianModel {
    Vec5 mean{};
    Mat5 covariance{};
    double ridge_lambda = 1e-6;
    double ridge = 0.0;  // absolute value added to the diagonal
    Mat5 precision{};

    bool operator==(const GaussianModel&) const = default;
};

inline constexpr double kDefaultRidge = 1e-6;

/// Population covariance plus lambda * (trace / 5) * I. A zero-trace covariance falls back to
/// lambda * I so identical samples still give an invertible model.
GaussianModel fit_gaussian(std::span<const Vec5> train, double lambda = kDefaultRidge);

/// (x - mu)^T (Sigma + ridge I)^-1 (x - mu)
double mahalanobis_score(const GaussianModel& model, const Vec5& x);

struct OcsvmModel {
    std::vector<Vec5> support_vectors;
    std::vector<double> alpha;
    double rho = 0.0;
    double gamma = 0.0;
    double nu = 0.05;
    int iterations = 0;
    double kkt_violation = 0.0;

    bool operator==(const OcsvmModel&) const = default;
};

struct OcsvmOptions {
    double tolerance = 1e-6;
    int max_iterations = 1'000'000;
};

inline constexpr double kDefaultNu = 0.05;

/// 1 / (5 * mean per-component population variance).
double default_rbf_gamma(std::span<const Vec5> train);

double rbf_kernel(const Vec5& a, const Vec5& b, double gamma);

/// SMO on  min 1/2 a^T K a  s.t. 0 <= a_i <= 1/(nu n), sum a_i = 1.
/// Returns only the points with nonzero alpha as support vectors.
OcsvmModel fit_ocsvm(std::span<const Vec5> train, double nu, double gamma, const OcsvmOptions& opts = {});

/// Full dual solution for every training point (same solver), for inspection.
std::vector<double> solve_ocsvm_dual(std::span<const Vec5> train, double nu, double gamma,
                                     const OcsvmOptions& opts = {}, double* rho = nullptr, int* iterations = nullptr,
                                     double* violation = nullptr);

/// 1/2 sum_ij a_i a_j K(sv_i, sv_j)
double ocsvm_dual_objective(const OcsvmModel& model);

/// rho - sum_i a_i K(x, sv_i); higher means more anomalous.
double ocsvm_score(const OcsvmModel& model, const Vec5& x);

} // namespace sketchauth
