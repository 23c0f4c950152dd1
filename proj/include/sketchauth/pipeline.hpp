#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sketchauth/eval.hpp"
#include "sketchauth/features.hpp"
#include "sketchauth/model.hpp"

namespace sketchauth {

/// Everything that determines a run.
struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path out;
    std::filesystem::path cache_dir;  // empty: <out>/cache
    double q = 0.95;
    std::uint64_t seed = 42;
    CannyParams canny;
    GlcmParams glcm;
    TrainConfig train;  // train.seed is ignored; per-artist seeds derive from `seed`
    BaselineConfig baseline;
    double sigma_floor = kDefaultSigmaFloor;
    std::vector<Method> methods{Method::autoencoder};
    bool allow_fetch = false;
    bool q_sweep = false;
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const;
};

/// seed xor stable hash of the artist id, so adding an artist leaves the others untouched.
std::uint64_t artist_seed(std::uint64_t seed, std::string_view artist_id);

std::filesystem::path features_path(const RunConfig& cfg);  // <out>/features.json
std::filesystem::path model_path(const RunConfig& cfg, std::string_view artist_id, Method method);
std::filesystem::path report_dir(const RunConfig& cfg, Method method);

DatasetManifest load_manifest(const std::filesystem::path& path);

/// Runs fn(i) for i in [0, n) on a bounded pool. The first exception (lowest index) is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

/// One feature row per manifest image, in manifest order; writes features.csv and features.json.
/// All per-image failures are collected and reported together.
std::vector<FeatureRow> cmd_extract(const RunConfig& cfg);

/// Fits one model per (artist, method) and writes them under <out>/models.
std::vector<VerifierModel> cmd_train(const RunConfig& cfg);

struct MethodReport {
    Method method;
    Evaluation evaluation;
    std::optional<SensitivityReport> sensitivity;
};

/// Writes a report bundle per method under <out>/reports/<method>.
std::vector<MethodReport> cmd_evaluate(const RunConfig& cfg);

/// Rebuilds a bundle from a decision log (artist order from the manifest when given, else
/// order of first appearance) into dest.
Evaluation report_from_decisions(const std::filesystem::path& decisions_csv, const std::filesystem::path& dest,
                                 const std::optional<DatasetManifest>& manifest);

/// Human-readable pooled summary of every bundle present under <out>/reports.
std::string summary_table(const RunConfig& cfg);

FeatureIndex index_features(const std::vector<FeatureRow>& rows);

} // namespace sketchauth
