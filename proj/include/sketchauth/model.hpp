#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sketchauth/baselines.hpp"
#include "sketchauth/features.hpp"
#include "sketchauth/verifier.hpp"

namespace sketchauth {

enum class Method { autoencoder, mahalanobis, ocsvm };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

using Scorer = std::variant<AutoencoderParams, GaussianModel, OcsvmModel>;

/// A per-artist one-class verifier: standardiser, scorer, and the calibrated threshold.
/// training_errors holds the scorer's output on every training vector so the threshold can
/// be recalibrated without retraining.
struct VerifierModel {
    std::string artist_id;
    Method method = Method::autoencoder;
    Scorer scorer;
    Standardiser standardiser;
    double q = 0.95;
    double threshold = 0.0;
    std::vector<double> training_errors;
    std::uint64_t seed = 0;
    TrainConfig train_config;  // autoencoder only
    int best_epoch = 0;
    int epochs_run = 0;

    bool operator==(const VerifierModel&) const = default;
};

struct BaselineConfig {
    double ridge_lambda = kDefaultRidge;
    double nu = kDefaultNu;
    std::optional<double> gamma;  // unset: default_rbf_gamma of the training data
};

/// Anomaly score of an already standardised vector.
double score_standardised(const VerifierModel& model, const Vec5& x);

/// Standardise with the model's own statistics, score, compare to the threshold.
Decision verify(const VerifierModel& model, const FeatureVector& f);

/// Fit standardiser + scorer on one artist's training features and calibrate the threshold
/// over all of them.
VerifierModel fit_verifier(std::string artist_id, std::span<const FeatureVector> train, Method method, double q,
                           const TrainConfig& train_cfg, const BaselineConfig& baseline_cfg = {},
                           double sigma_floor = kDefaultSigmaFloor);

/// Same model with the threshold recomputed at a different quantile.
VerifierModel recalibrated(const VerifierModel& model, double q);

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const VerifierModel& model);
VerifierModel model_from_json(const std::string& text);

} // namespace sketchauth
