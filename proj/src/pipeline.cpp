#include "sketchauth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "sketchauth/error.hpp"
#include "sketchauth/ingest.hpp"
#include "sketchauth/rng.hpp"
#include "text_util.hpp"

namespace sketchauth {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
    if (!(q > 0.0 && q <= 1.0)) throw ValidationError("config: q must be in (0,1]");
    if (out.empty()) throw ValidationError("config: output directory is required");
    if (methods.empty()) throw ValidationError("config: at least one method is required");
    canny.validate();
    glcm.validate();
    train.validate();
    if (!(baseline.nu > 0.0 && baseline.nu <= 1.0)) throw ValidationError("config: nu must be in (0,1]");
    if (!(baseline.ridge_lambda > 0.0)) throw ValidationError("config: ridge lambda must be positive");
    if (baseline.gamma && !(*baseline.gamma > 0.0)) throw ValidationError("config: gamma must be positive");
    if (!(sigma_floor > 0.0)) throw ValidationError("config: sigma_floor must be positive");
}

std::uint64_t artist_seed(std::uint64_t seed, std::string_view artist_id) { return seed ^ stable_hash(artist_id); }

fs::path features_path(const RunConfig& cfg) { return cfg.out / "features.json"; }

fs::path model_path(const RunConfig& cfg, std::string_view artist_id, Method method) {
    return cfg.out / "models" / (std::string(artist_id) + "." + std::string(method_name(method)) + ".json");
}

fs::path report_dir(const RunConfig& cfg, Method method) { return cfg.out / "reports" / std::string(method_name(method)); }

DatasetManifest load_manifest(const fs::path& path) {
    if (!fs::exists(path)) throw ValidationError("manifest not found: " + path.string());
    return parse_manifest(read_text(path));
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

FeatureIndex index_features(const std::vector<FeatureRow>& rows) {
    FeatureIndex idx;
    for (const auto& r : rows) idx.emplace(r.image_id, r.features);
    return idx;
}

std::vector<FeatureRow> cmd_extract(const RunConfig& cfg) {
    cfg.validate();
    const DatasetManifest manifest = load_manifest(cfg.manifest);
    LoadOptions opts;
    opts.base_dir = cfg.manifest.parent_path();
    opts.cache_dir = cfg.cache_dir.empty() ? cfg.out / "cache" : cfg.cache_dir;
    opts.allow_fetch = cfg.allow_fetch;

    struct Job {
        const ArtistRecord* artist;
        const ImageEntry* entry;
    };
    std::vector<Job> jobs;
    for (const auto& a : manifest.artists) {
        for (const auto& e : a.images) jobs.push_back({&a, &e});
    }

    std::vector<FeatureRow> rows(jobs.size());
    std::vector<std::string> failures(jobs.size());
    parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
        const Job& job = jobs[i];
        FeatureRow& row = rows[i];
        row.image_id = job.entry->image_id;
        row.artist_id = job.artist->artist_id;
        row.split = std::string(split_name(job.entry->split));
        try {
            row.features = extract_features(load_image(*job.entry, opts), cfg.canny, cfg.glcm);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    std::string report;
    std::size_t n_failed = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (failures[i].empty()) continue;
        ++n_failed;
        report += "\n  " + jobs[i].entry->image_id + ": " + failures[i];
    }
    if (n_failed > 0) {
        throw RuntimeFailure("extract: " + std::to_string(n_failed) + " image(s) failed:" + report);
    }

    fs::create_directories(cfg.out);
    write_text(cfg.out / "features.csv", features_to_csv(rows));
    write_text(features_path(cfg), features_to_json(rows));
    return rows;
}

namespace {

std::vector<FeatureRow> read_features(const RunConfig& cfg) {
    const fs::path p = features_path(cfg);
    if (!fs::exists(p)) throw ValidationError("features file not found: " + p.string() + " (run extract first)");
    return features_from_json(read_text(p));
}

std::vector<FeatureVector> split_features(const ArtistRecord& a, Split s, const FeatureIndex& idx) {
    std::vector<FeatureVector> out;
    for (const ImageEntry* e : a.split_images(s)) {
        const auto it = idx.find(e->image_id);
        if (it == idx.end()) throw ValidationError("no features for image '" + e->image_id + "'");
        out.push_back(it->second);
    }
    return out;
}

json canny_json(const CannyParams& c) { return {{"sigma", c.sigma}, {"t_low", c.t_low}, {"t_high", c.t_high}}; }

json run_meta(const RunConfig& cfg, const DatasetManifest& manifest, Method method,
              const std::vector<VerifierModel>& models) {
    json j;
    j["manifest_sha256"] = [&] {
        const auto bytes = read_file(cfg.manifest);
        return sha256_hex(bytes);
    }();
    j["manifest_version"] = manifest.version;
    j["method"] = std::string(method_name(method));
    j["seed"] = cfg.seed;
    j["q"] = cfg.q;
    j["canny"] = canny_json(cfg.canny);
    j["glcm"] = {{"levels", cfg.glcm.levels}, {"distance", cfg.glcm.distance}};
    j["sigma_floor"] = cfg.sigma_floor;
    j["n_train"] = manifest.n_train;
    j["n_test"] = manifest.n_test;
    if (method == Method::autoencoder) {
        const auto& t = cfg.train;
        j["train"] = {{"learning_rate", t.learning_rate}, {"max_epochs", t.max_epochs}, {"patience", t.patience},
                      {"val_fraction", t.val_fraction},   {"beta1", t.beta1},           {"beta2", t.beta2},
                      {"adam_epsilon", t.adam_epsilon},   {"widths", kAutoencoderWidths}};
    } else if (method == Method::mahalanobis) {
        j["baseline"] = {{"ridge_lambda", cfg.baseline.ridge_lambda}};
    } else {
        j["baseline"] = {{"nu", cfg.baseline.nu},
                         {"gamma", cfg.baseline.gamma ? json(*cfg.baseline.gamma) : json("default")}};
    }
    json per_artist = json::object();
    for (const auto& m : models) {
        json a = {{"seed", m.seed}, {"threshold", m.threshold}};
        if (const auto* o = std::get_if<OcsvmModel>(&m.scorer)) a["gamma"] = o->gamma;
        if (m.method == Method::autoencoder) {
            a["best_epoch"] = m.best_epoch;
            a["epochs_run"] = m.epochs_run;
        }
        per_artist[m.artist_id] = std::move(a);
    }
    j["per_artist"] = std::move(per_artist);
    return j;
}

} // namespace

std::vector<VerifierModel> cmd_train(const RunConfig& cfg) {
    cfg.validate();
    const DatasetManifest manifest = load_manifest(cfg.manifest);
    const FeatureIndex idx = index_features(read_features(cfg));

    struct Job {
        const ArtistRecord* artist;
        Method method;
    };
    std::vector<Job> jobs;
    for (const auto& a : manifest.artists) {
        for (Method m : cfg.methods) jobs.push_back({&a, m});
    }
    std::vector<VerifierModel> models(jobs.size());
    parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
        const auto& a = *jobs[i].artist;
        TrainConfig tc = cfg.train;
        tc.seed = artist_seed(cfg.seed, a.artist_id);
        const auto train = split_features(a, Split::train, idx);
        try {
            models[i] = fit_verifier(a.artist_id, train, jobs[i].method, cfg.q, tc, cfg.baseline, cfg.sigma_floor);
        } catch (const RuntimeFailure& e) {
            throw RuntimeFailure("artist '" + a.artist_id + "' (" + std::string(method_name(jobs[i].method)) +
                                 "): " + e.what());
        }
        write_text(model_path(cfg, a.artist_id, jobs[i].method), model_to_json(models[i]));
    });
    return models;
}

std::vector<MethodReport> cmd_evaluate(const RunConfig& cfg) {
    cfg.validate();
    const DatasetManifest manifest = load_manifest(cfg.manifest);
    const FeatureIndex idx = index_features(read_features(cfg));

    std::vector<MethodReport> reports;
    for (Method method : cfg.methods) {
        std::vector<VerifierModel> models;
        for (const auto& a : manifest.artists) {
            const fs::path p = model_path(cfg, a.artist_id, method);
            if (!fs::exists(p)) throw ValidationError("model not found: " + p.string() + " (run train first)");
            VerifierModel m = model_from_json(read_text(p));
            if (m.artist_id != a.artist_id || m.method != method) {
                throw ValidationError("model file " + p.string() + " does not match its artist/method");
            }
            // evaluation runs at the configured operating point
            if (m.q != cfg.q) m = recalibrated(m, cfg.q);
            models.push_back(std::move(m));
        }
        MethodReport r{method, evaluate(manifest, models, idx), std::nullopt};
        if (cfg.q_sweep) r.sensitivity = q_sweep(manifest, models, idx);
        json meta = run_meta(cfg, manifest, method, models);
        if (r.sensitivity) meta["q_sweep"] = kSweepQuantiles;
        write_report_bundle(report_dir(cfg, method), r.evaluation, r.sensitivity, meta.dump(2) + "\n");
        reports.push_back(std::move(r));
    }
    return reports;
}

Evaluation report_from_decisions(const fs::path& decisions_csv, const fs::path& dest,
                                 const std::optional<DatasetManifest>& manifest) {
    if (!fs::exists(decisions_csv)) throw ValidationError("decision log not found: " + decisions_csv.string());
    auto decisions = decisions_from_csv(read_text(decisions_csv));
    std::vector<std::string> artists;
    if (manifest) {
        for (const auto& a : manifest->artists) artists.push_back(a.artist_id);
    } else {
        for (const auto& d : decisions) {
            for (const auto* id : {&d.target, &d.source}) {
                if (std::find(artists.begin(), artists.end(), *id) == artists.end()) artists.push_back(*id);
            }
        }
    }
    Evaluation e = summarise(std::move(decisions), artists);
    json meta;
    meta["source"] = "decision_log";
    meta["decision_log_sha256"] = sha256_hex(read_file(decisions_csv));
    meta["artists"] = artists;
    write_report_bundle(dest, e, std::nullopt, meta.dump(2) + "\n");
    return e;
}

std::string summary_table(const RunConfig& cfg) {
    std::string out;
    const fs::path root = cfg.out / "reports";
    if (!fs::exists(root)) throw ValidationError("no reports under " + root.string() + " (run evaluate first)");
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "metrics_pooled.json")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw ValidationError("no report bundles under " + root.string());
    out += "method         TAR     [95% CI]          FAR     [95% CI]          acc     bal.acc  MCC\n";
    for (const auto& d : dirs) {
        const json j = json::parse(read_text(d / "metrics_pooled.json"));
        auto pct = [](const json& v) { return v.is_null() ? std::string("NA") : detail::format_fixed(100.0 * v.get<double>(), 1) + "%"; };
        auto ci = [&](const json& w) {
            return w.is_null() ? std::string("NA") : "[" + pct(w["lower"]) + ", " + pct(w["upper"]) + "]";
        };
        auto pad = [](std::string s, std::size_t n) {
            s.resize(std::max(s.size(), n), ' ');
            return s;
        };
        out += pad(d.filename().string(), 15) + pad(pct(j["tar"]), 8) + pad(ci(j["wilson_95"]["tar"]), 18) +
               pad(pct(j["far"]), 8) + pad(ci(j["wilson_95"]["far"]), 18) + pad(pct(j["accuracy"]), 8) +
               pad(pct(j["balanced_accuracy"]), 9) + detail::format_fixed(j["mcc"].get<double>(), 3) + "\n";
    }
    return out;
}

} // namespace sketchauth
