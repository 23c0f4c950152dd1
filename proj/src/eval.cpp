#include "sketchauth/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "sketchauth/error.hpp"
#include "text_util.hpp"

namespace sketchauth {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(long num, long den) { return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : kNaN; }

std::size_t index_of(std::span<const std::string> artists, std::string_view id) {
    const auto it = std::find(artists.begin(), artists.end(), id);
    if (it == artists.end()) throw ValidationError("unknown artist '" + std::string(id) + "' in decision log");
    return static_cast<std::size_t>(it - artists.begin());
}

} // namespace

std::size_t TrialSet::genuine_count() const {
    return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(), [](const Trial& t) { return t.genuine; }));
}

std::size_t TrialSet::impostor_count() const { return trials.size() - genuine_count(); }

TrialSet build_trials(const DatasetManifest& manifest, std::string_view target) {
    const ArtistRecord* t = manifest.find(target);
    if (!t) throw ValidationError("build_trials: unknown target artist '" + std::string(target) + "'");
    TrialSet set;
    set.target = t->artist_id;
    auto test_images = [&](const ArtistRecord& a) {
        auto imgs = a.split_images(Split::test);
        if (static_cast<int>(imgs.size()) != manifest.n_test) {
            throw ValidationError("build_trials: artist '" + a.artist_id + "' has " + std::to_string(imgs.size()) +
                                  " test images, expected " + std::to_string(manifest.n_test));
        }
        return imgs;
    };
    for (const ImageEntry* e : test_images(*t)) set.trials.push_back({e->image_id, t->artist_id, true});
    for (const auto& a : manifest.artists) {
        if (a.artist_id == t->artist_id) continue;
        for (const ImageEntry* e : test_images(a)) set.trials.push_back({e->image_id, a.artist_id, false});
    }
    return set;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fn += o.fn;
    fp += o.fp;
    tn += o.tn;
    return *this;
}

void tally(ConfusionCounts& c, const TrialDecision& d) {
    if (d.genuine) {
        (d.accepted ? c.tp : c.fn) += 1;
    } else {
        (d.accepted ? c.fp : c.tn) += 1;
    }
}

TrialOutcome run_trials(const VerifierModel& model, const TrialSet& trials, const FeatureIndex& features) {
    TrialOutcome out;
    out.decisions.reserve(trials.trials.size());
    for (const auto& t : trials.trials) {
        const auto it = features.find(t.image_id);
        if (it == features.end()) {
            throw ValidationError("run_trials: no feature vector for probe '" + t.image_id + "'");
        }
        const Decision d = verify(model, it->second);
        TrialDecision td{trials.target, t.source_artist, t.image_id, t.genuine, d.score, d.threshold, d.accepted};
        tally(out.counts, td);
        out.decisions.push_back(std::move(td));
    }
    return out;
}

WilsonInterval wilson_interval(long x, long n, double z) {
    if (n <= 0) throw ValidationError("wilson_interval: n must be >= 1");
    if (x < 0 || x > n) throw ValidationError("wilson_interval: x must be in [0, n]");
    const double nd = static_cast<double>(n);
    const double p = static_cast<double>(x) / nd;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nd;
    const double centre = p + z2 / (2.0 * nd);
    const double half = z * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
    WilsonInterval w;
    w.estimate = p;
    // the interval always contains p; clamping to it removes rounding residue at x = 0 and x = n
    w.lower = std::clamp((centre - half) / denom, 0.0, p);
    w.upper = std::clamp((centre + half) / denom, p, 1.0);
    w.n = n;
    w.x = x;
    w.z = z;
    return w;
}

BiometricMetrics compute_metrics(const ConfusionCounts& c, double z) {
    BiometricMetrics m;
    m.counts = c;
    const long ng = c.genuine();
    const long ni = c.impostor();
    m.no_genuine = ng == 0;
    m.no_impostor = ni == 0;

    m.far = ratio(c.fp, ni);
    m.specificity = ratio(c.tn, ni);
    m.frr = ratio(c.fn, ng);
    m.tar = ratio(c.tp, ng);
    m.recall = m.tar;
    m.accuracy = ratio(c.tp + c.tn, c.total());
    m.balanced_accuracy = 0.5 * (m.tar + m.specificity);
    m.precision_undefined = c.tp + c.fp == 0;
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);

    if (ni > 0) {
        m.far_ci = wilson_interval(c.fp, ni, z);
        m.specificity_ci = wilson_interval(c.tn, ni, z);
    }
    if (ng > 0) {
        m.frr_ci = wilson_interval(c.fn, ng, z);
        m.tar_ci = wilson_interval(c.tp, ng, z);
    }
    if (c.total() > 0) m.accuracy_ci = wilson_interval(c.tp + c.tn, c.total(), z);

    const double f1 = static_cast<double>(c.tp + c.fp);
    const double f2 = static_cast<double>(c.tp + c.fn);
    const double f3 = static_cast<double>(c.tn + c.fp);
    const double f4 = static_cast<double>(c.tn + c.fn);
    if (f1 == 0.0 || f2 == 0.0 || f3 == 0.0 || f4 == 0.0) {
        m.mcc = 0.0;
        m.mcc_degenerate = true;
    } else {
        const double num = static_cast<double>(c.tp) * static_cast<double>(c.tn) -
                           static_cast<double>(c.fp) * static_cast<double>(c.fn);
        m.mcc = num / std::sqrt(f1 * f2 * f3 * f4);
    }
    return m;
}

long PairwiseAttribution::row_sum(std::size_t target) const {
    long s = 0;
    for (std::size_t j = 0; j < counts[target].size(); ++j) {
        if (j != target) s += counts[target][j];
    }
    return s;
}

PairwiseAttribution attribute_false_accepts(std::span<const TrialDecision> decisions,
                                            std::span<const std::string> artists) {
    PairwiseAttribution a;
    a.artists.assign(artists.begin(), artists.end());
    a.counts.assign(artists.size(), std::vector<long>(artists.size(), 0));
    for (const auto& d : decisions) {
        const std::size_t t = index_of(artists, d.target);
        const std::size_t s = index_of(artists, d.source);
        if (d.genuine != (t == s)) {
            throw ValidationError("attribute_false_accepts: inconsistent labels for probe '" + d.image_id +
                                  "' (target " + d.target + ", source " + d.source + ")");
        }
        if (!d.genuine && d.accepted) ++a.counts[t][s];
    }
    return a;
}

Evaluation summarise(std::vector<TrialDecision> decisions, std::span<const std::string> artists) {
    Evaluation e;
    e.attribution = attribute_false_accepts(decisions, artists);
    e.per_artist.resize(artists.size());
    for (std::size_t i = 0; i < artists.size(); ++i) e.per_artist[i].artist_id = artists[i];
    for (const auto& d : decisions) tally(e.per_artist[index_of(artists, d.target)].counts, d);
    for (std::size_t i = 0; i < artists.size(); ++i) {
        auto& pa = e.per_artist[i];
        if (e.attribution.row_sum(i) != pa.counts.fp) {
            throw RuntimeFailure("summarise: attribution row for '" + pa.artist_id + "' does not match its FP count");
        }
        pa.metrics = compute_metrics(pa.counts);
        e.pooled += pa.counts;
    }
    e.pooled_metrics = compute_metrics(e.pooled);
    e.decisions = std::move(decisions);
    return e;
}

namespace {

const VerifierModel& model_for(std::span<const VerifierModel> models, std::string_view artist) {
    for (const auto& m : models) {
        if (m.artist_id == artist) return m;
    }
    throw ValidationError("evaluate: no model for artist '" + std::string(artist) + "'");
}

std::vector<std::string> artist_ids(const DatasetManifest& manifest) {
    std::vector<std::string> ids;
    for (const auto& a : manifest.artists) ids.push_back(a.artist_id);
    return ids;
}

} // namespace

Evaluation evaluate(const DatasetManifest& manifest, std::span<const VerifierModel> models,
                    const FeatureIndex& features) {
    std::vector<TrialDecision> all;
    for (const auto& a : manifest.artists) {
        auto outcome = run_trials(model_for(models, a.artist_id), build_trials(manifest, a.artist_id), features);
        std::move(outcome.decisions.begin(), outcome.decisions.end(), std::back_inserter(all));
    }
    const auto ids = artist_ids(manifest);
    return summarise(std::move(all), ids);
}

SensitivityReport q_sweep(const DatasetManifest& manifest, std::span<const VerifierModel> models,
                          const FeatureIndex& features, std::span<const double> qs) {
    SensitivityReport report;
    for (double q : qs) {
        SensitivityRow row;
        row.q = q;
        for (const auto& a : manifest.artists) {
            const VerifierModel m = recalibrated(model_for(models, a.artist_id), q);
            row.pooled += run_trials(m, build_trials(manifest, a.artist_id), features).counts;
        }
        row.far = ratio(row.pooled.fp, row.pooled.impostor());
        row.tar = ratio(row.pooled.tp, row.pooled.genuine());
        report.rows.push_back(row);
    }
    return report;
}

// ---- serialisation ----

namespace {

constexpr const char* kDecisionHeader = "target,source,image_id,genuine,score,threshold,accepted";

std::string pct(double v) { return std::isnan(v) ? "NA" : detail::format_fixed(100.0 * v, 1); }
std::string dec3(double v) { return std::isnan(v) ? "NA" : detail::format_fixed(v, 3); }

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json interval_json(const std::optional<WilsonInterval>& w) {
    if (!w) return nullptr;
    return {{"estimate", w->estimate}, {"lower", w->lower}, {"upper", w->upper},
            {"x", w->x},               {"n", w->n},         {"z", w->z}};
}

} // namespace

std::string decisions_to_csv(std::span<const TrialDecision> decisions) {
    std::string out = std::string(kDecisionHeader) + "\n";
    for (const auto& d : decisions) {
        out += d.target + "," + d.source + "," + d.image_id + "," + (d.genuine ? "1" : "0") + "," +
               detail::format_double(d.score) + "," + detail::format_double(d.threshold) + "," +
               (d.accepted ? "1" : "0") + "\n";
    }
    return out;
}

std::vector<TrialDecision> decisions_from_csv(const std::string& text) {
    const auto ls = detail::lines(text);
    if (ls.empty() || ls.front() != kDecisionHeader) throw ValidationError("decisions csv: missing or unexpected header");
    std::vector<TrialDecision> out;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto c = detail::split(ls[i], ',');
        if (c.size() != 7) throw ValidationError("decisions csv: line " + std::to_string(i + 1) + " has wrong arity");
        TrialDecision d;
        d.target = c[0];
        d.source = c[1];
        d.image_id = c[2];
        d.genuine = c[3] == "1";
        try {
            d.score = std::stod(c[4]);
            d.threshold = std::stod(c[5]);
        } catch (const std::exception&) {
            throw ValidationError("decisions csv: bad number on line " + std::to_string(i + 1));
        }
        d.accepted = c[6] == "1";
        out.push_back(std::move(d));
    }
    return out;
}

std::string metrics_to_json(const BiometricMetrics& m) {
    json j;
    j["counts"] = {{"tp", m.counts.tp}, {"fn", m.counts.fn}, {"fp", m.counts.fp}, {"tn", m.counts.tn}};
    j["n_genuine"] = m.counts.genuine();
    j["n_impostor"] = m.counts.impostor();
    j["far"] = number_or_null(m.far);
    j["frr"] = number_or_null(m.frr);
    j["tar"] = number_or_null(m.tar);
    j["specificity"] = number_or_null(m.specificity);
    j["accuracy"] = number_or_null(m.accuracy);
    j["balanced_accuracy"] = number_or_null(m.balanced_accuracy);
    j["precision"] = number_or_null(m.precision);
    j["recall"] = number_or_null(m.recall);
    j["f1"] = number_or_null(m.f1);
    j["mcc"] = m.mcc;
    j["wilson_95"] = {{"far", interval_json(m.far_ci)},
                      {"frr", interval_json(m.frr_ci)},
                      {"tar", interval_json(m.tar_ci)},
                      {"specificity", interval_json(m.specificity_ci)},
                      {"accuracy", interval_json(m.accuracy_ci)}};
    j["flags"] = {{"mcc_degenerate", m.mcc_degenerate},
                  {"no_genuine", m.no_genuine},
                  {"no_impostor", m.no_impostor},
                  {"precision_undefined", m.precision_undefined}};
    return j.dump(2) + "\n";
}

std::string metrics_per_artist_csv(const Evaluation& e) {
    std::string out =
        "artist_id,far_pct,far_ci_low,far_ci_high,frr_pct,frr_ci_low,frr_ci_high,tar_pct,tar_ci_low,tar_ci_high,"
        "specificity_pct,accuracy_pct,precision,recall,f1,balanced_accuracy,mcc\n";
    auto ci = [](const std::optional<WilsonInterval>& w) {
        return w ? pct(w->lower) + "," + pct(w->upper) : std::string("NA,NA");
    };
    for (const auto& a : e.per_artist) {
        const auto& m = a.metrics;
        out += a.artist_id + "," + pct(m.far) + "," + ci(m.far_ci) + "," + pct(m.frr) + "," + ci(m.frr_ci) + "," +
               pct(m.tar) + "," + ci(m.tar_ci) + "," + pct(m.specificity) + "," + pct(m.accuracy) + "," +
               dec3(m.precision) + "," + dec3(m.recall) + "," + dec3(m.f1) + "," + dec3(m.balanced_accuracy) + "," +
               dec3(m.mcc) + "\n";
    }
    return out;
}

std::string confusion_per_artist_csv(const Evaluation& e) {
    std::string out = "artist_id,tp,fn,fp,tn,accuracy_pct,mcc\n";
    auto row = [&](const std::string& id, const BiometricMetrics& m) {
        const auto& c = m.counts;
        out += id + "," + std::to_string(c.tp) + "," + std::to_string(c.fn) + "," + std::to_string(c.fp) + "," +
               std::to_string(c.tn) + "," + pct(m.accuracy) + "," + dec3(m.mcc) + "\n";
    };
    for (const auto& a : e.per_artist) row(a.artist_id, a.metrics);
    row("pooled", e.pooled_metrics);
    return out;
}

std::string pairwise_attribution_csv(const PairwiseAttribution& a) {
    std::string out = "target";
    for (const auto& s : a.artists) out += "," + s;
    out += "\n";
    for (std::size_t t = 0; t < a.artists.size(); ++t) {
        out += a.artists[t];
        for (std::size_t s = 0; s < a.artists.size(); ++s) out += "," + (s == t ? std::string("---") : std::to_string(a.at(t, s)));
        out += "\n";
    }
    return out;
}

std::string sensitivity_csv(const SensitivityReport& r) {
    std::string out = "q,far,tar,fp,n_impostor,tp,n_genuine\n";
    for (const auto& row : r.rows) {
        out += detail::format_fixed(row.q, 2) + "," + detail::format_double(row.far) + "," +
               detail::format_double(row.tar) + "," + std::to_string(row.pooled.fp) + "," +
               std::to_string(row.pooled.impostor()) + "," + std::to_string(row.pooled.tp) + "," +
               std::to_string(row.pooled.genuine()) + "\n";
    }
    return out;
}

void write_report_bundle(const std::filesystem::path& dir, const Evaluation& e,
                         const std::optional<SensitivityReport>& sensitivity, const std::string& run_meta_json) {
    std::filesystem::create_directories(dir);
    write_text(dir / "metrics_pooled.json", metrics_to_json(e.pooled_metrics));
    write_text(dir / "metrics_per_artist.csv", metrics_per_artist_csv(e));
    write_text(dir / "confusion_per_artist.csv", confusion_per_artist_csv(e));
    write_text(dir / "pairwise_attribution.csv", pairwise_attribution_csv(e.attribution));
    write_text(dir / "decisions.csv", decisions_to_csv(e.decisions));
    if (sensitivity) {
        write_text(dir / "sensitivity.csv", sensitivity_csv(*sensitivity));
    } else {
        std::filesystem::remove(dir / "sensitivity.csv");
    }
    write_text(dir / "run_meta.json", run_meta_json);
}

} // namespace sketchauth
