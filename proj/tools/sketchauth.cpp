// Command-line driver: extract -> train -> evaluate -> report.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sketchauth/error.hpp"
#include "sketchauth/pipeline.hpp"
#include "sketchauth/synthetic.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::vector<sketchauth::Method> parse_methods(const std::string& list) {
    std::vector<sketchauth::Method> out;
    if (list == "all") {
        return {sketchauth::Method::autoencoder, sketchauth::Method::mahalanobis, sketchauth::Method::ocsvm};
    }
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto pos = list.find(',', start);
        const std::string name = list.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        if (!name.empty()) out.push_back(sketchauth::parse_method(name));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    using namespace sketchauth;

    CLI::App app{"One-class verification of drawings from handcrafted image features"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key-value config file; command-line flags override it");

    RunConfig cfg;
    std::string manifest;
    std::string out;
    std::string cache;
    std::string methods = "autoencoder";
    std::string decisions;
    double gamma = 0.0;
    SyntheticCorpusSpec corpus;

    app.add_option("--manifest", manifest, "Dataset manifest (JSON)");
    app.add_option("--out", out, "Output directory for features, models and reports");
    app.add_option("--cache", cache, "Image cache directory (default <out>/cache)");
    app.add_option("--q", cfg.q, "Training-error quantile used as the acceptance threshold")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Top-level seed")->capture_default_str();
    app.add_option("--methods", methods, "Comma list of autoencoder,mahalanobis,ocsvm, or 'all'")->capture_default_str();
    app.add_flag("--fetch", cfg.allow_fetch, "Allow downloading images from source_url into the cache");
    app.add_flag("--q-sweep", cfg.q_sweep, "Also report pooled FAR/TAR at q = 0.90, 0.95, 0.99");
    app.add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
    app.add_option("--canny-sigma", cfg.canny.sigma)->capture_default_str();
    app.add_option("--canny-low", cfg.canny.t_low)->capture_default_str();
    app.add_option("--canny-high", cfg.canny.t_high)->capture_default_str();
    app.add_option("--glcm-levels", cfg.glcm.levels)->capture_default_str();
    app.add_option("--glcm-distance", cfg.glcm.distance)->capture_default_str();
    app.add_option("--lr", cfg.train.learning_rate)->capture_default_str();
    app.add_option("--epochs", cfg.train.max_epochs)->capture_default_str();
    app.add_option("--patience", cfg.train.patience)->capture_default_str();
    app.add_option("--val-fraction", cfg.train.val_fraction)->capture_default_str();
    app.add_option("--ridge", cfg.baseline.ridge_lambda, "Relative ridge for the Gaussian baseline")->capture_default_str();
    app.add_option("--nu", cfg.baseline.nu, "One-class SVM nu")->capture_default_str();
    auto* gamma_opt = app.add_option("--gamma", gamma, "One-class SVM RBF width (default from training variance)");
    app.add_option("--sigma-floor", cfg.sigma_floor)->capture_default_str();

    auto* extract = app.add_subcommand("extract", "Compute the five features for every manifest image");
    auto* train = app.add_subcommand("train", "Fit one verifier per artist and method");
    auto* evaluate = app.add_subcommand("evaluate", "Run genuine/impostor trials and write report bundles");
    auto* report = app.add_subcommand("report", "Print pooled summaries, or rebuild a bundle from a decision log");
    report->add_option("--decisions", decisions, "Decision log CSV to rebuild a report bundle from");
    auto* gen = app.add_subcommand("generate-corpus", "Write a synthetic texture-family corpus and manifest");
    gen->add_option("--artists", corpus.artists)->capture_default_str();
    gen->add_option("--image-size", corpus.size)->capture_default_str();
    for (auto* sub : {extract, train, evaluate, report, gen}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        cfg.manifest = manifest;
        cfg.out = out;
        cfg.cache_dir = cache;
        cfg.methods = parse_methods(methods);
        if (gamma_opt->count() > 0) cfg.baseline.gamma = gamma;

        if (gen->parsed()) {
            if (out.empty()) throw ValidationError("--out is required");
            corpus.seed = cfg.seed;
            const auto m = write_synthetic_corpus(cfg.out, corpus);
            std::cout << "wrote " << m.image_count() << " images for " << m.artists.size() << " artists to "
                      << (cfg.out / "manifest.json").string() << "\n";
            return 0;
        }
        if (report->parsed()) {
            if (out.empty()) throw ValidationError("--out is required");
            if (!decisions.empty()) {
                std::optional<DatasetManifest> m;
                if (!manifest.empty()) m = load_manifest(cfg.manifest);
                const auto e = report_from_decisions(decisions, cfg.out, m);
                const auto& pm = e.pooled_metrics;
                std::cout << "rebuilt report bundle in " << cfg.out.string() << ": TP=" << pm.counts.tp
                          << " FN=" << pm.counts.fn << " FP=" << pm.counts.fp << " TN=" << pm.counts.tn << "\n";
                return 0;
            }
            std::cout << summary_table(cfg);
            return 0;
        }
        if (manifest.empty()) throw ValidationError("--manifest is required");
        if (extract->parsed()) {
            const auto rows = cmd_extract(cfg);
            std::cout << "extracted features for " << rows.size() << " images\n";
        } else if (train->parsed()) {
            const auto models = cmd_train(cfg);
            std::cout << "trained " << models.size() << " models\n";
        } else if (evaluate->parsed()) {
            const auto reports = cmd_evaluate(cfg);
            for (const auto& r : reports) {
                const auto& m = r.evaluation.pooled_metrics;
                std::cout << method_name(r.method) << ": pooled TAR " << m.tar << ", FAR " << m.far << ", MCC "
                          << m.mcc << "\n";
            }
        }
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kExitRuntime;
    }
}
