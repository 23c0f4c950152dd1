#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sketchauth/features.hpp"
#include "sketchauth/ingest.hpp"
#include "sketchauth/model.hpp"

namespace sketchauth {

struct Trial {
    std::string image_id;
    std::string source_artist;
    bool genuine = false;
};

/// Genuine probes first (target's test images in manifest order), then impostors in
/// manifest artist order.
struct TrialSet {
    std::string target;
    std::vector<Trial> trials;

    std::size_t genuine_count() const;
    std::size_t impostor_count() const;
};

TrialSet build_trials(const DatasetManifest& manifest, std::string_view target);

struct ConfusionCounts {
    long tp = 0;
    long fn = 0;
    long fp = 0;
    long tn = 0;

    long genuine() const { return tp + fn; }
    long impostor() const { return fp + tn; }
    long total() const { return tp + fn + fp + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o);
    bool operator==(const ConfusionCounts&) const = default;
};

struct TrialDecision {
    std::string target;
    std::string source;
    std::string image_id;
    bool genuine = false;
    double score = 0.0;
    double threshold = 0.0;
    bool accepted = false;
};

void tally(ConfusionCounts& c, const TrialDecision& d);

using FeatureIndex = std::map<std::string, FeatureVector, std::less<>>;

struct TrialOutcome {
    std::vector<TrialDecision> decisions;
    ConfusionCounts counts;
};

/// Throws ValidationError if a probe has no feature vector.
TrialOutcome run_trials(const VerifierModel& model, const TrialSet& trials, const FeatureIndex& features);

struct WilsonInterval {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    long n = 0;
    long x = 0;
    double z = 1.96;
};

WilsonInterval wilson_interval(long x, long n, double z = 1.96);

/// Rates with an empty denominator are NaN and reported as flags; MCC with a zero
/// denominator factor is 0 with mcc_degenerate set.
struct BiometricMetrics {
    ConfusionCounts counts;
    double far = 0.0;
    double frr = 0.0;
    double tar = 0.0;
    double specificity = 0.0;
    double accuracy = 0.0;
    double balanced_accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mcc = 0.0;
    std::optional<WilsonInterval> far_ci, frr_ci, tar_ci, specificity_ci, accuracy_ci;
    bool mcc_degenerate = false;
    bool no_genuine = false;
    bool no_impostor = false;
    bool precision_undefined = false;
};

BiometricMetrics compute_metrics(const ConfusionCounts& c, double z = 1.96);

/// entry[target][source]: impostor probes from source accepted by target's verifier.
struct PairwiseAttribution {
    std::vector<std::string> artists;
    std::vector<std::vector<long>> counts;

    long at(std::size_t target, std::size_t source) const { return counts[target][source]; }
    long row_sum(std::size_t target) const;
};

PairwiseAttribution attribute_false_accepts(std::span<const TrialDecision> decisions,
                                            std::span<const std::string> artists);

struct ArtistEvaluation {
    std::string artist_id;
    ConfusionCounts counts;
    BiometricMetrics metrics;
};

struct Evaluation {
    std::vector<ArtistEvaluation> per_artist;
    ConfusionCounts pooled;
    BiometricMetrics pooled_metrics;
    PairwiseAttribution attribution;
    std::vector<TrialDecision> decisions;
};

/// Aggregates a decision log: per-target counts in the given artist order, pooled counts as
/// the componentwise sum, attribution matrix reconciled against per-target FP.
Evaluation summarise(std::vector<TrialDecision> decisions, std::span<const std::string> artists);

/// One model per manifest artist (matched by artist_id).
Evaluation evaluate(const DatasetManifest& manifest, std::span<const VerifierModel> models,
                    const FeatureIndex& features);

struct SensitivityRow {
    double q = 0.0;
    ConfusionCounts pooled;
    double far = 0.0;
    double tar = 0.0;
};

struct SensitivityReport {
    std::vector<SensitivityRow> rows;
};

inline constexpr std::array<double, 3> kSweepQuantiles{0.90, 0.95, 0.99};

/// Recalibrates each model's threshold from its stored training errors; no retraining.
SensitivityReport q_sweep(const DatasetManifest& manifest, std::span<const VerifierModel> models,
                          const FeatureIndex& features, std::span<const double> qs = kSweepQuantiles);

// ---- report bundle ----

std::string decisions_to_csv(std::span<const TrialDecision> decisions);
std::vector<TrialDecision> decisions_from_csv(const std::string& text);

std::string metrics_to_json(const BiometricMetrics& m);
std::string metrics_per_artist_csv(const Evaluation& e);
std::string confusion_per_artist_csv(const Evaluation& e);
std::string pairwise_attribution_csv(const PairwiseAttribution& a);
std::string sensitivity_csv(const SensitivityReport& r);

/// Writes metrics_pooled.json, metrics_per_artist.csv, confusion_per_artist.csv,
/// pairwise_attribution.csv, decisions.csv, optionally sensitivity.csv, and run_meta.json.
void write_report_bundle(const std::filesystem::path& dir, const Evaluation& e,
                         const std::optional<SensitivityReport>& sensitivity, const std::string& run_meta_json);

} // namespace sketchauth
