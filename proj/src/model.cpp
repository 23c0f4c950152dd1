#include "sketchauth/model.hpp"

#include <cmath>

#include <json.hpp>

#include "sketchauth/error.hpp"

namespace sketchauth {

using nlohmann::json;

std::string_view method_name(Method m) {
    switch (m) {
    case Method::autoencoder: return "autoencoder";
    case Method::mahalanobis: return "mahalanobis";
    case Method::ocsvm: return "ocsvm";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "autoencoder") return Method::autoencoder;
    if (name == "mahalanobis") return Method::mahalanobis;
    if (name == "ocsvm") return Method::ocsvm;
    throw ValidationError("unknown method '" + std::string(name) + "'");
}

double score_standardised(const VerifierModel& model, const Vec5& x) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, AutoencoderParams>) {
                return reconstruction_error(s, x);
            } else if constexpr (std::is_same_v<T, GaussianModel>) {
                return mahalanobis_score(s, x);
            } else {
                return ocsvm_score(s, x);
            }
        },
        model.scorer);
}

Decision verify(const VerifierModel& model, const FeatureVector& f) {
    return decide(score_standardised(model, standardise(f, model.standardiser)), model.threshold);
}

VerifierModel fit_verifier(std::string artist_id, std::span<const FeatureVector> train, Method method, double q,
                           const TrainConfig& train_cfg, const BaselineConfig& baseline_cfg, double sigma_floor) {
    VerifierModel m;
    m.artist_id = std::move(artist_id);
    m.method = method;
    m.q = q;
    m.seed = train_cfg.seed;
    m.standardiser = fit_standardiser(train, sigma_floor);
    std::vector<Vec5> x;
    x.reserve(train.size());
    for (const auto& f : train) x.push_back(standardise(f, m.standardiser));

    switch (method) {
    case Method::autoencoder: {
        auto result = train_autoencoder(x, train_cfg);
        m.scorer = std::move(result.params);
        m.train_config = train_cfg;
        m.best_epoch = result.best_epoch;
        m.epochs_run = result.epochs_run;
        break;
    }
    case Method::mahalanobis:
        m.scorer = fit_gaussian(x, baseline_cfg.ridge_lambda);
        break;
    case Method::ocsvm: {
        const double gamma = baseline_cfg.gamma.value_or(default_rbf_gamma(x));
        m.scorer = fit_ocsvm(x, baseline_cfg.nu, gamma);
        break;
    }
    }

    m.training_errors.reserve(x.size());
    for (const auto& v : x) {
        const double e = score_standardised(m, v);
        if (!std::isfinite(e)) throw RuntimeFailure("fit_verifier: non-finite training score for " + m.artist_id);
        m.training_errors.push_back(e);
    }
    m.threshold = calibrate_threshold(m.training_errors, q);
    return m;
}

VerifierModel recalibrated(const VerifierModel& model, double q) {
    VerifierModel m = model;
    m.q = q;
    m.threshold = calibrate_threshold(m.training_errors, q);
    return m;
}

namespace {

json vec_json(const Vec5& v) { return json(std::vector<double>(v.begin(), v.end())); }

Vec5 vec_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != kFeatureCount) throw ValidationError("model json: expected a 5-vector");
    Vec5 out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

json mat_json(const Mat5& m) {
    json rows = json::array();
    for (const auto& r : m) rows.push_back(vec_json(r));
    return rows;
}

Mat5 mat_from(const json& j) {
    if (j.size() != kFeatureCount) throw ValidationError("model json: expected a 5x5 matrix");
    Mat5 m{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) m[i] = vec_from(j[i]);
    return m;
}

json scorer_json(const Scorer& scorer) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            json j;
            if constexpr (std::is_same_v<T, AutoencoderParams>) {
                j["widths"] = s.widths;
                j["layers"] = json::array();
                for (const auto& l : s.layers) {
                    j["layers"].push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
                }
                j["hidden_activation"] = "relu";
                j["output_activation"] = "linear";
            } else if constexpr (std::is_same_v<T, GaussianModel>) {
                j["mean"] = vec_json(s.mean);
                j["covariance"] = mat_json(s.covariance);
                j["ridge_lambda"] = s.ridge_lambda;
                j["ridge"] = s.ridge;
                j["precision"] = mat_json(s.precision);
            } else {
                j["support_vectors"] = json::array();
                for (const auto& sv : s.support_vectors) j["support_vectors"].push_back(vec_json(sv));
                j["alpha"] = s.alpha;
                j["rho"] = s.rho;
                j["gamma"] = s.gamma;
                j["nu"] = s.nu;
                j["iterations"] = s.iterations;
                j["kkt_violation"] = s.kkt_violation;
            }
            return j;
        },
        scorer);
}

Scorer scorer_from(Method method, const json& j) {
    switch (method) {
    case Method::autoencoder: {
        const auto widths = j.at("widths").get<std::vector<int>>();
        AutoencoderParams p = AutoencoderParams::zeros(widths);
        const auto& layers = j.at("layers");
        if (layers.size() != p.layers.size()) throw ValidationError("model json: layer count does not match widths");
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            auto w = layers[l].at("weights").get<std::vector<double>>();
            auto b = layers[l].at("bias").get<std::vector<double>>();
            if (w.size() != p.layers[l].weights.size() || b.size() != p.layers[l].bias.size()) {
                throw ValidationError("model json: layer " + std::to_string(l) + " shape mismatch");
            }
            p.layers[l].weights = std::move(w);
            p.layers[l].bias = std::move(b);
        }
        if (!p.all_finite()) throw ValidationError("model json: non-finite parameters");
        return p;
    }
    case Method::mahalanobis: {
        GaussianModel g;
        g.mean = vec_from(j.at("mean"));
        g.covariance = mat_from(j.at("covariance"));
        g.ridge_lambda = j.at("ridge_lambda").get<double>();
        g.ridge = j.at("ridge").get<double>();
        g.precision = mat_from(j.at("precision"));
        return g;
    }
    case Method::ocsvm: {
        OcsvmModel o;
        for (const auto& sv : j.at("support_vectors")) o.support_vectors.push_back(vec_from(sv));
        o.alpha = j.at("alpha").get<std::vector<double>>();
        if (o.alpha.size() != o.support_vectors.size()) throw ValidationError("model json: alpha/support mismatch");
        o.rho = j.at("rho").get<double>();
        o.gamma = j.at("gamma").get<double>();
        o.nu = j.at("nu").get<double>();
        o.iterations = j.at("iterations").get<int>();
        o.kkt_violation = j.at("kkt_violation").get<double>();
        return o;
    }
    }
    throw ValidationError("model json: unknown method");
}

} // namespace

std::string model_to_json(const VerifierModel& m) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["artist_id"] = m.artist_id;
    j["method"] = std::string(method_name(m.method));
    j["seed"] = m.seed;
    j["q"] = m.q;
    j["threshold"] = m.threshold;
    j["training_errors"] = m.training_errors;
    j["standardiser"] = {{"mean", vec_json(m.standardiser.mean)},
                         {"stddev", vec_json(m.standardiser.stddev)},
                         {"sigma_floor", m.standardiser.sigma_floor}};
    j["scorer"] = scorer_json(m.scorer);
    if (m.method == Method::autoencoder) {
        const auto& c = m.train_config;
        j["training"] = {{"learning_rate", c.learning_rate}, {"max_epochs", c.max_epochs},
                         {"patience", c.patience},           {"val_fraction", c.val_fraction},
                         {"beta1", c.beta1},                 {"beta2", c.beta2},
                         {"adam_epsilon", c.adam_epsilon},   {"best_epoch", m.best_epoch},
                         {"epochs_run", m.epochs_run}};
    }
    return j.dump(2) + "\n";
}

VerifierModel model_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.at("format_version").get<int>() != kModelFormatVersion) {
            throw ValidationError("model json: unsupported format_version");
        }
        VerifierModel m;
        m.artist_id = j.at("artist_id").get<std::string>();
        m.method = parse_method(j.at("method").get<std::string>());
        m.seed = j.at("seed").get<std::uint64_t>();
        m.q = j.at("q").get<double>();
        m.threshold = j.at("threshold").get<double>();
        m.training_errors = j.at("training_errors").get<std::vector<double>>();
        const auto& s = j.at("standardiser");
        m.standardiser.mean = vec_from(s.at("mean"));
        m.standardiser.stddev = vec_from(s.at("stddev"));
        m.standardiser.sigma_floor = s.at("sigma_floor").get<double>();
        m.scorer = scorer_from(m.method, j.at("scorer"));
        if (m.method == Method::autoencoder) {
            const auto& t = j.at("training");
            m.train_config.learning_rate = t.at("learning_rate").get<double>();
            m.train_config.max_epochs = t.at("max_epochs").get<int>();
            m.train_config.patience = t.at("patience").get<int>();
            m.train_config.val_fraction = t.at("val_fraction").get<double>();
            m.train_config.beta1 = t.at("beta1").get<double>();
            m.train_config.beta2 = t.at("beta2").get<double>();
            m.train_config.adam_epsilon = t.at("adam_epsilon").get<double>();
            m.train_config.seed = m.seed;
            m.best_epoch = t.at("best_epoch").get<int>();
            m.epochs_run = t.at("epochs_run").get<int>();
        }
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model json: ") + e.what());
    }
}

} // namespace sketchauth
