#include <doctest.h>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "reference_tables.hpp"
#include "sketchauth/error.hpp"
#include "sketchauth/pipeline.hpp"
#include "sketchauth/synthetic.hpp"
#include "support.hpp"

using namespace sketchauth;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

RunConfig toy_run(const fs::path& root, int n_train, int n_test) {
    SyntheticCorpusSpec spec;
    spec.artists = 2;
    spec.n_train = n_train;
    spec.n_test = n_test;
    spec.size = 64;
    write_synthetic_corpus(root / "corpus", spec);
    RunConfig cfg;
    cfg.manifest = root / "corpus" / "manifest.json";
    cfg.out = root / "out";
    cfg.threads = 2;
    return cfg;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SKETCHAUTH_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("extract on a four-image toy manifest") {
    TempDir dir("extract");
    const auto cfg = toy_run(dir.path(), 1, 1);
    const auto rows = cmd_extract(cfg);
    CHECK(rows.size() == 4);
    const auto first = read_text(cfg.out / "features.csv");
    const auto first_json = read_text(features_path(cfg));
    cmd_extract(cfg);
    CHECK(read_text(cfg.out / "features.csv") == first);
    CHECK(read_text(features_path(cfg)) == first_json);
    CHECK(std::count(first.begin(), first.end(), '\n') == 5);
}

TEST_CASE("extract names the missing image") {
    TempDir dir("missing");
    const auto cfg = toy_run(dir.path(), 1, 1);
    fs::remove(dir.path() / "corpus" / "images" / "family1" / "family1_01.png");
    std::string msg;
    try {
        cmd_extract(cfg);
    } catch (const RuntimeFailure& e) {
        msg = e.what();
    }
    CHECK(msg.find("family1_01") != std::string::npos);
}

TEST_CASE("train, evaluate and sweep on a two-artist toy run") {
    TempDir dir("toyrun");
    auto cfg = toy_run(dir.path(), 6, 9);
    cmd_extract(cfg);

    const auto models = cmd_train(cfg);
    CHECK(models.size() == 2);
    for (const auto& m : models) {
        CHECK(std::isfinite(m.threshold));
        CHECK(fs::exists(model_path(cfg, m.artist_id, Method::autoencoder)));
    }
    const auto first = read_text(model_path(cfg, "family0", Method::autoencoder));
    cmd_train(cfg);
    CHECK(read_text(model_path(cfg, "family0", Method::autoencoder)) == first);

    cfg.methods = {Method::autoencoder, Method::mahalanobis, Method::ocsvm};
    CHECK(cmd_train(cfg).size() == 6);
    for (const char* a : {"family0", "family1"}) {
        std::size_t n = 0;
        for (const auto& e : fs::directory_iterator(cfg.out / "models")) n += e.path().filename().string().starts_with(a);
        CHECK(n == 3);
    }

    cfg.q_sweep = true;
    const auto reports = cmd_evaluate(cfg);
    REQUIRE(reports.size() == 3);
    for (const auto& r : reports) {
        const auto& pm = r.evaluation.pooled_metrics;
        CHECK(pm.counts.genuine() == 18);
        CHECK(pm.counts.impostor() == 18);
        CHECK_FALSE(std::isnan(pm.far));
        CHECK_FALSE(std::isnan(pm.tar));
        CHECK(pm.far_ci.has_value());
        CHECK(pm.tar_ci.has_value());
        const auto dir_m = report_dir(cfg, r.method);
        const auto sens = read_text(dir_m / "sensitivity.csv");
        CHECK(std::count(sens.begin(), sens.end(), '\n') == 4);
        const auto meta = nlohmann::json::parse(read_text(dir_m / "run_meta.json"));
        CHECK(meta.contains("seed"));
    }
    CHECK(summary_table(cfg).find("autoencoder") != std::string::npos);
}

TEST_CASE("injected decision log reproduces the pooled reference cells") {
    TempDir dir("inject");
    const auto e = summarise(reference::decision_log(),
                             std::vector<std::string>(reference::kNames.begin(), reference::kNames.end()));
    write_text(dir.path() / "decisions.csv", decisions_to_csv(e.decisions));
    report_from_decisions(dir.path() / "decisions.csv", dir.path() / "bundle", std::nullopt);
    const auto j = nlohmann::json::parse(read_text(dir.path() / "bundle" / "metrics_pooled.json"));
    CHECK(std::abs(100 * j["far"].get<double>() - 9.5) <= 0.05);
    CHECK(std::abs(100 * j["frr"].get<double>() - 16.7) <= 0.05);
    CHECK(std::abs(100 * j["tar"].get<double>() - 83.3) <= 0.05);
    CHECK(std::abs(100 * j["specificity"].get<double>() - 90.5) <= 0.05);
    CHECK(std::abs(100 * j["accuracy"].get<double>() - 89.8) <= 0.05);
    CHECK(std::abs(100 * j["balanced_accuracy"].get<double>() - 86.9) <= 0.05);
    CHECK(std::abs(j["mcc"].get<double>() - 0.59) <= 0.005);
}

TEST_CASE("command-line exit codes") {
    TempDir dir("cli");
    const std::string out = (dir.path() / "out").string();
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("") == 1);
    CHECK(run_cli("extract --manifest " + (dir.path() / "absent.json").string() + " --out " + out) == 1);
    CHECK(run_cli("train --q 1.5 --manifest x --out " + out) == 1);
    CHECK(run_cli("evaluate --methods knn --manifest x --out " + out) == 1);

    write_text(dir.path() / "bad.json", "{ not json");
    CHECK(run_cli("extract --manifest " + (dir.path() / "bad.json").string() + " --out " + out) == 1);

    // a manifest that validates but points at an unreadable image is a runtime failure
    SyntheticCorpusSpec spec;
    spec.artists = 2;
    spec.n_train = 1;
    spec.n_test = 1;
    spec.size = 16;
    write_synthetic_corpus(dir.path() / "c", spec);
    write_text(dir.path() / "c" / "images" / "family0" / "family0_00.png", "garbage");
    CHECK(run_cli("extract --manifest " + (dir.path() / "c" / "manifest.json").string() + " --out " + out) == 2);

    fs::remove(dir.path() / "c" / "images" / "family0" / "family0_00.png");
    write_synthetic_corpus(dir.path() / "c", spec);
    CHECK(run_cli("extract --manifest " + (dir.path() / "c" / "manifest.json").string() + " --out " + out) == 0);
    CHECK(fs::exists(dir.path() / "out" / "features.csv"));
}

TEST_CASE("artist seeds are independent of other artists") {
    CHECK(artist_seed(42, "a") == artist_seed(42, "a"));
    CHECK(artist_seed(42, "a") != artist_seed(42, "b"));
    CHECK(artist_seed(42, "a") != artist_seed(43, "a"));
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    std::string msg;
    try {
        parallel_for(50, 4, [](std::size_t i) {
            if (i == 7 || i == 30) throw RuntimeFailure("fail " + std::to_string(i));
        });
    } catch (const RuntimeFailure& e) {
        msg = e.what();
    }
    CHECK(msg == "fail 7");
}
