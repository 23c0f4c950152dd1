#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sketchauth/features.hpp"

namespace sketchauth {

/// Dense layer: weights are out x in, row-major.
struct DenseLayer {
    int in = 0;
    int out = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    double& w(int o, int i) { return weights[static_cast<std::size_t>(o) * in + i]; }
    double w(int o, int i) const { return weights[static_cast<std::size_t>(o) * in + i]; }
    bool operator==(const DenseLayer&) const = default;
};

inline constexpr std::array<int, 5> kAutoencoderWidths{5, 4, 2, 4, 5};

/// ReLU on every hidden layer, linear output layer.
struct AutoencoderParams {
    std::vector<int> widths{kAutoencoderWidths.begin(), kAutoencoderWidths.end()};
    std::vector<DenseLayer> layers;

    /// Zero-initialised parameters with the given widths.
    static AutoencoderParams zeros(std::span<const int> widths);
    std::size_t parameter_count() const;
    bool all_finite() const;
    bool operator==(const AutoencoderParams&) const = default;
};

/// Flat view over all weights then biases of every layer, in layer order.
std::vector<double> flatten(const AutoencoderParams& p);
void unflatten(AutoencoderParams& p, std::span<const double> flat);

struct TrainConfig {
    double learning_rate = 0.001;
    int max_epochs = 100;
    int patience = 10;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

/// Glorot-uniform weights, zero biases, deterministic in the seed.
AutoencoderParams init_params(std::uint64_t seed, std::span<const int> widths = kAutoencoderWidths);

Vec5 forward(const AutoencoderParams& p, const Vec5& x);

/// Squared Euclidean distance between x and its reconstruction.
double reconstruction_error(const AutoencoderParams& p, const Vec5& x);

/// Mean over the batch of squared reconstruction error.
double batch_loss(const AutoencoderParams& p, std::span<const Vec5> batch);

/// Analytic gradient of batch_loss, laid out like flatten().
std::vector<double> loss_gradient(const AutoencoderParams& p, std::span<const Vec5> batch);

struct TrainResult {
    AutoencoderParams params;
    std::vector<double> train_loss;       // per epoch, before the update
    std::vector<double> validation_loss;  // per epoch, after the update
    int best_epoch = 0;                   // 0 = initial parameters
    int epochs_run = 0;
};

TrainResult train_autoencoder(std::span<const Vec5> vectors, const TrainConfig& cfg);

/// Nearest-rank quantile: the ceil(q n)-th smallest value.
double calibrate_threshold(std::span<const double> errors, double q);

struct Decision {
    bool accepted = false;
    double score = 0.0;
    double threshold = 0.0;
};

inline Decision decide(double score, double threshold) { return {score <= threshold, score, threshold}; }

} // namespace sketchauth
