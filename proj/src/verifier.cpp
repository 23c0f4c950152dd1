#include "sketchauth/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sketchauth/error.hpp"
#include "sketchauth/rng.hpp"

namespace sketchauth {

AutoencoderParams AutoencoderParams::zeros(std::span<const int> widths) {
    if (widths.size() < 2) throw ValidationError("autoencoder: need at least two layer widths");
    AutoencoderParams p;
    p.widths.assign(widths.begin(), widths.end());
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        DenseLayer layer;
        layer.in = widths[l];
        layer.out = widths[l + 1];
        layer.weights.assign(static_cast<std::size_t>(layer.in) * layer.out, 0.0);
        layer.bias.assign(static_cast<std::size_t>(layer.out), 0.0);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

std::size_t AutoencoderParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

bool AutoencoderParams::all_finite() const {
    for (const auto& l : layers) {
        for (double w : l.weights) if (!std::isfinite(w)) return false;
        for (double b : l.bias) if (!std::isfinite(b)) return false;
    }
    return true;
}

std::vector<double> flatten(const AutoencoderParams& p) {
    std::vector<double> flat;
    flat.reserve(p.parameter_count());
    for (const auto& l : p.layers) {
        flat.insert(flat.end(), l.weights.begin(), l.weights.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void unflatten(AutoencoderParams& p, std::span<const double> flat) {
    if (flat.size() != p.parameter_count()) throw ValidationError("unflatten: size mismatch");
    std::size_t k = 0;
    for (auto& l : p.layers) {
        for (double& w : l.weights) w = flat[k++];
        for (double& b : l.bias) b = flat[k++];
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("train: learning rate must be positive");
    if (max_epochs < 1) throw ValidationError("train: max_epochs must be >= 1");
    if (patience < 1 || patience > max_epochs) throw ValidationError("train: patience must be in [1, max_epochs]");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("train: val_fraction must be in (0,1)");
}

AutoencoderParams init_params(std::uint64_t seed, std::span<const int> widths) {
    AutoencoderParams p = AutoencoderParams::zeros(widths);
    Rng rng(seed);
    for (auto& l : p.layers) {
        const double bound = std::sqrt(6.0 / (l.in + l.out));
        for (double& w : l.weights) w = rng.uniform(-bound, bound);
    }
    return p;
}

namespace {

struct ForwardCache {
    // activations[0] is the input; pre[l] is the pre-activation of layer l
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> pre;
};

ForwardCache run_forward(const AutoencoderParams& p, std::span<const double> x) {
    ForwardCache cache;
    cache.activations.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const DenseLayer& layer = p.layers[l];
        const auto& in = cache.activations.back();
        std::vector<double> z(static_cast<std::size_t>(layer.out));
        for (int o = 0; o < layer.out; ++o) {
            double acc = layer.bias[static_cast<std::size_t>(o)];
            for (int i = 0; i < layer.in; ++i) acc += layer.w(o, i) * in[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(o)] = acc;
        }
        std::vector<double> a = z;
        if (l + 1 < p.layers.size()) {
            for (double& v : a) v = std::max(v, 0.0);
        }
        cache.pre.push_back(std::move(z));
        cache.activations.push_back(std::move(a));
    }
    return cache;
}

void check_io_width(const AutoencoderParams& p) {
    if (p.widths.front() != static_cast<int>(kFeatureCount) || p.widths.back() != static_cast<int>(kFeatureCount)) {
        throw ValidationError("autoencoder: input/output width must be 5");
    }
}

} // namespace

Vec5 forward(const AutoencoderParams& p, const Vec5& x) {
    check_io_width(p);
    const auto cache = run_forward(p, x);
    Vec5 out{};
    std::copy_n(cache.activations.back().begin(), kFeatureCount, out.begin());
    return out;
}

double reconstruction_error(const AutoencoderParams& p, const Vec5& x) {
    const Vec5 xh = forward(p, x);
    double e = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) e += (x[j] - xh[j]) * (x[j] - xh[j]);
    return e;
}

double batch_loss(const AutoencoderParams& p, std::span<const Vec5> batch) {
    if (batch.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& x : batch) sum += reconstruction_error(p, x);
    return sum / static_cast<double>(batch.size());
}

std::vector<double> loss_gradient(const AutoencoderParams& p, std::span<const Vec5> batch) {
    check_io_width(p);
    AutoencoderParams grad = AutoencoderParams::zeros(p.widths);
    if (batch.empty()) return flatten(grad);
    const double scale = 2.0 / static_cast<double>(batch.size());

    for (const auto& x : batch) {
        const auto cache = run_forward(p, x);
        std::vector<double> delta(kFeatureCount);
        for (std::size_t j = 0; j < kFeatureCount; ++j) delta[j] = scale * (cache.activations.back()[j] - x[j]);

        for (std::size_t l = p.layers.size(); l-- > 0;) {
            const DenseLayer& layer = p.layers[l];
            DenseLayer& g = grad.layers[l];
            const auto& in = cache.activations[l];
            for (int o = 0; o < layer.out; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                g.bias[static_cast<std::size_t>(o)] += d;
                for (int i = 0; i < layer.in; ++i) g.w(o, i) += d * in[static_cast<std::size_t>(i)];
            }
            if (l == 0) break;
            std::vector<double> next(static_cast<std::size_t>(layer.in), 0.0);
            const auto& z_prev = cache.pre[l - 1];
            for (int i = 0; i < layer.in; ++i) {
                if (z_prev[static_cast<std::size_t>(i)] <= 0.0) continue;
                double acc = 0.0;
                for (int o = 0; o < layer.out; ++o) acc += layer.w(o, i) * delta[static_cast<std::size_t>(o)];
                next[static_cast<std::size_t>(i)] = acc;
            }
            delta = std::move(next);
        }
    }
    return flatten(grad);
}

TrainResult train_autoencoder(std::span<const Vec5> vectors, const TrainConfig& cfg) {
    cfg.validate();
    if (vectors.size() < 5) {
        throw ValidationError("train: need at least 5 vectors, got " + std::to_string(vectors.size()));
    }

    std::vector<std::size_t> order(vectors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffler(splitmix64(cfg.seed));
    shuffler.shuffle(order);

    const auto n_val = static_cast<std::size_t>(std::ceil(cfg.val_fraction * static_cast<double>(vectors.size()) - 1e-9));
    const std::size_t n_fit = vectors.size() - n_val;
    std::vector<Vec5> fit;
    std::vector<Vec5> val;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_fit ? fit : val).push_back(vectors[order[i]]);
    }

    TrainResult result;
    AutoencoderParams params = init_params(cfg.seed);
    std::vector<double> theta = flatten(params);
    std::vector<double> m(theta.size(), 0.0);
    std::vector<double> v(theta.size(), 0.0);

    double best_val = batch_loss(params, val);
    if (!std::isfinite(best_val)) throw RuntimeFailure("train: non-finite initial validation loss");
    result.params = params;
    int since_best = 0;
    double b1t = 1.0;
    double b2t = 1.0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double loss = batch_loss(params, fit);
        if (!std::isfinite(loss)) {
            throw RuntimeFailure("train: non-finite training loss at epoch " + std::to_string(epoch));
        }
        result.train_loss.push_back(loss);

        const auto g = loss_gradient(params, fit);
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double mh = m[k] / (1.0 - b1t);
            const double vh = v[k] / (1.0 - b2t);
            theta[k] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.adam_epsilon);
        }
        unflatten(params, theta);

        const double vl = batch_loss(params, val);
        if (!std::isfinite(vl)) {
            throw RuntimeFailure("train: non-finite validation loss at epoch " + std::to_string(epoch));
        }
        result.validation_loss.push_back(vl);
        result.epochs_run = epoch;
        if (vl < best_val) {
            best_val = vl;
            result.params = params;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

double calibrate_threshold(std::span<const double> errors, double q) {
    if (errors.empty()) throw ValidationError("calibrate_threshold: empty error list");
    if (!(q > 0.0 && q <= 1.0)) throw ValidationError("calibrate_threshold: q must be in (0,1]");
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    // q*n such as 0.95*20 must land on 19, not 20, despite representation error
    auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

} // namespace sketchauth
