#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <json.hpp>

#include "sketchauth/error.hpp"
#include "sketchauth/features.hpp"
#include "sketchauth/ingest.hpp"
#include "support.hpp"

using namespace sketchauth;

namespace {

std::vector<std::complex<double>> direct_dft(const GreyImage& g) {
    const int m = g.height, n = g.width;
    std::vector<std::complex<double>> f(static_cast<std::size_t>(m) * n);
    for (int u = 0; u < m; ++u) {
        for (int v = 0; v < n; ++v) {
            std::complex<double> acc = 0;
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double ang = -2 * std::numbers::pi * (double(u) * i / m + double(v) * j / n);
                    acc += g.at(i, j) * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            }
            f[u * n + v] = acc;
        }
    }
    return f;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    long double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return static_cast<double>(sxy / sxx);
}

double slope_of_counts(const std::vector<double>& counts) {
    std::vector<double> x, y;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        x.push_back(std::log(1.0 / kBoxSizes[k]));
        y.push_back(std::log(counts[k]));
    }
    return ols_slope(x, y);
}

// Homogeneity by enumerating every ordered pair per orientation, both directions counted.
double enumerated_homogeneity(const GreyImage& g, int levels) {
    auto level = [&](int r, int c) { return std::min(int(std::floor(g.at(r, c) * levels)), levels - 1); };
    const int offsets[4][2] = {{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}};
    double total = 0;
    for (const auto& o : offsets) {
        double num = 0, pairs = 0;
        for (int r = 0; r < g.height; ++r) {
            for (int c = 0; c < g.width; ++c) {
                const int rr = r + o[0], cc = c + o[1];
                if (rr < 0 || rr >= g.height || cc < 0 || cc >= g.width) continue;
                const int a = level(r, c), b = level(rr, cc);
                num += 2.0 / (1.0 + std::abs(a - b));
                pairs += 2;
            }
        }
        total += num / pairs;
    }
    return total / 4;
}

GreyImage checkerboard(int size, double a, double b) {
    GreyImage g(size, size);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) g.at(r, c) = (r + c) % 2 ? b : a;
    }
    return g;
}

GreyImage fixture4() {
    GreyImage g(4, 4);
    g.pixels = {0.00, 0.10, 0.20, 0.30, 0.90, 0.85, 0.50, 0.05,
                0.33, 0.66, 0.99, 0.01, 0.70, 0.70, 0.12, 0.45};
    return g;
}

} // namespace

TEST_CASE("fourier energy of a constant and a zero image") {
    CHECK(fourier_energy(GreyImage(224, 224, 1.0)) == 2'517'630'976.0);
    CHECK(fourier_energy(GreyImage(224, 224, 0.0)) == 0.0);
}

TEST_CASE("8x8 random image against direct-summation DFT") {
    Rng rng(21);
    const auto g = testsupport::random_grey(rng, 8, 8);
    const auto oracle = direct_dft(g);
    double oracle_energy = 0;
    for (const auto& f : oracle) oracle_energy += std::norm(f);
    const auto spec = dft2d(g);
    for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) CHECK(std::abs(spec.at(u, v) - oracle[u * 8 + v]) < 1e-9);
    }
    CHECK(std::abs(spectral_energy(spec) - oracle_energy) / oracle_energy < 1e-9);
    CHECK(std::abs(fourier_energy(g) - oracle_energy) / oracle_energy < 1e-9);
}

TEST_CASE("Parseval holds on non-square images") {
    Rng rng(22);
    for (auto [w, h] : {std::pair{12, 7}, {16, 16}, {5, 30}}) {
        const auto g = testsupport::random_grey(rng, w, h);
        const double direct = spectral_energy(dft2d(g));
        CHECK(std::abs(direct - fourier_energy(g)) / direct < 1e-9);
    }
}

TEST_CASE("entropy examples") {
    CHECK(shannon_entropy(GreyImage(16, 16, 0.3)) == 0.0);
    GreyImage two(16, 16);
    for (std::size_t i = 0; i < two.size(); ++i) two.pixels[i] = i % 2 ? 0.9 : 0.1;
    CHECK(shannon_entropy(two) == doctest::Approx(1.0).epsilon(1e-15));
    GreyImage all(256, 4);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 256; ++c) all.at(r, c) = (c + 0.5) / 256.0;
    }
    CHECK(shannon_entropy(all) == doctest::Approx(8.0).epsilon(1e-15));
    const auto h = histogram256(all);
    CHECK(h.total == 1024);
    CHECK(std::all_of(h.counts.begin(), h.counts.end(), [](std::size_t n) { return n == 4; }));
}

TEST_CASE("histogram binning edges") {
    GreyImage g(3, 1);
    g.pixels = {0.0, 1.0, 255.5 / 256.0};
    const auto h = histogram256(g);
    CHECK(h.counts[0] == 1);
    CHECK(h.counts[255] == 2);
}

TEST_CASE("contrast examples") {
    CHECK(contrast(GreyImage(9, 9, 0.77)) == 0.0);
    GreyImage half(10, 10);
    for (std::size_t i = 0; i < half.size(); ++i) half.pixels[i] = i < 50 ? 0.0 : 1.0;
    CHECK(contrast(half) == doctest::Approx(0.5).epsilon(1e-15));

    const auto g = fixture4();
    long double mean = 0;
    for (double p : g.pixels) mean += p;
    mean /= 16;
    long double var = 0;
    for (double p : g.pixels) var += (p - mean) * (p - mean);
    const double expect = static_cast<double>(std::sqrt(var / 16));
    CHECK(contrast(g) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("glcm homogeneity examples") {
    CHECK(glcm_homogeneity(GreyImage(20, 20, 0.4)) == doctest::Approx(1.0).epsilon(1e-15));

    const auto board = checkerboard(224, 0.0, 1.0);
    const auto q = quantise_levels(board, 64);
    CHECK(q[0] == 0);
    CHECK(q[1] == 63);
    const double expect = enumerated_homogeneity(board, 64);
    CHECK(expect == doctest::Approx((1.0 / 64 + 1.0 / 64 + 1 + 1) / 4).epsilon(1e-12));
    CHECK(glcm_homogeneity(board) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(glcm_homogeneity(board) == doctest::Approx(0.5078).epsilon(1e-4));

    CHECK(glcm_homogeneity(fixture4()) == doctest::Approx(enumerated_homogeneity(fixture4(), 64)).epsilon(1e-13));
    CHECK(glcm_homogeneity(fixture4(), {8, 1}) ==
          doctest::Approx(enumerated_homogeneity(fixture4(), 8)).epsilon(1e-13));
}

TEST_CASE("glcm matrices are symmetric and normalised") {
    Rng rng(31);
    const auto g = testsupport::random_grey(rng, 30, 25);
    for (const auto& m : glcm_matrices(g)) {
        double sum = 0;
        for (int i = 0; i < m.levels; ++i) {
            for (int j = 0; j < m.levels; ++j) {
                CHECK(m.at(i, j) == m.at(j, i));
                sum += m.at(i, j);
            }
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(glcm_matrices(GreyImage(1, 1, 0.5)), ValidationError);
    CHECK_THROWS_AS(glcm_homogeneity(g, {1, 1}), ValidationError);
}

TEST_CASE("box counting") {
    SUBCASE("empty map") {
        const auto d = fractal_dimension(EdgeMap(224, 224));
        CHECK(d.dimension == 0.0);
        CHECK(d.edgeless);
    }
    SUBCASE("horizontal line") {
        EdgeMap e(224, 224);
        for (int c = 0; c < 224; ++c) e.set(100, c);
        const auto d = fractal_dimension(e);
        const std::array<std::size_t, 6> expect{112, 56, 28, 14, 7, 4};
        CHECK(d.series.counts == expect);
        CHECK(!d.edgeless);
        CHECK(d.dimension == doctest::Approx(slope_of_counts({112, 56, 28, 14, 7, 4})).epsilon(1e-12));
        CHECK(d.dimension == doctest::Approx(0.972).epsilon(0.001));
    }
    SUBCASE("full map") {
        EdgeMap e(224, 224);
        std::fill(e.edges.begin(), e.edges.end(), 1);
        const auto d = fractal_dimension(e);
        std::vector<double> counts;
        for (int s : kBoxSizes) {
            const double k = std::ceil(224.0 / s);
            counts.push_back(k * k);
        }
        for (std::size_t k = 0; k < 6; ++k) CHECK(double(d.series.counts[k]) == counts[k]);
        CHECK(d.dimension == doctest::Approx(slope_of_counts(counts)).epsilon(1e-12));
        CHECK(d.dimension == doctest::Approx(1.94).epsilon(0.005));
    }
    SUBCASE("single pixel") {
        EdgeMap e(224, 224);
        e.set(0, 0);
        const auto d = fractal_dimension(e);
        for (auto n : d.series.counts) CHECK(n == 1);
        CHECK(d.dimension == doctest::Approx(0.0));
        CHECK(!d.edgeless);
    }
}

TEST_CASE("extract_features on a constant white image") {
    RgbImage white(100, 60);
    std::fill(white.pixels.begin(), white.pixels.end(), 255);
    const auto f = extract_features(white);
    CHECK(f.fourier_energy == 224.0 * 224 * 224 * 224);
    CHECK(f.shannon_entropy == 0.0);
    CHECK(f.contrast == 0.0);
    CHECK(f.homogeneity == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f.fractal_dimension == 0.0);
    CHECK(f.edgeless);
}

TEST_CASE("extract_features equals the individual extractors") {
    RgbImage board(224, 224);
    for (int r = 0; r < 224; ++r) {
        for (int c = 0; c < 224; ++c) {
            const std::uint8_t v = ((r / 8 + c / 8) % 2) ? 230 : 20;
            auto* p = board.at(r, c);
            p[0] = p[1] = p[2] = v;
        }
    }
    const auto grey = resize_bicubic(to_grey_normalised(board));
    const auto f = extract_features(board);
    CHECK(f.fourier_energy == fourier_energy(grey));
    CHECK(f.shannon_entropy == shannon_entropy(grey));
    CHECK(f.contrast == contrast(grey));
    CHECK(f.homogeneity == glcm_homogeneity(grey));
    const auto d = fractal_dimension(canny(grey));
    CHECK(f.fractal_dimension == d.dimension);
    CHECK(f.edgeless == d.edgeless);
}

TEST_CASE("disc fixture matches the pinned golden vector") {
    const auto disc = testsupport::disc(256, 127.5, 127.5, 80.0);
    RgbImage img(256, 256);
    for (std::size_t i = 0; i < disc.size(); ++i) {
        const auto v = static_cast<std::uint8_t>(disc.pixels[i] > 0 ? 40 : 220);
        img.pixels[3 * i] = img.pixels[3 * i + 1] = img.pixels[3 * i + 2] = v;
    }
    const auto f = extract_features(img);
    const auto golden = nlohmann::json::parse(read_text(std::string(SKETCHAUTH_GOLDEN_DIR) + "/disc_features.json"));
    CHECK(f.fourier_energy == doctest::Approx(golden["fourier_energy"].get<double>()).epsilon(1e-12));
    CHECK(f.shannon_entropy == doctest::Approx(golden["shannon_entropy"].get<double>()).epsilon(1e-12));
    CHECK(f.contrast == doctest::Approx(golden["contrast"].get<double>()).epsilon(1e-12));
    CHECK(f.homogeneity == doctest::Approx(golden["glcm_homogeneity"].get<double>()).epsilon(1e-12));
    CHECK(f.fractal_dimension == doctest::Approx(golden["fractal_dimension"].get<double>()).epsilon(1e-12));
    CHECK(f.edgeless == golden["edgeless"].get<bool>());
}

TEST_CASE("standardiser") {
    SUBCASE("identical vectors hit the sigma floor") {
        const std::vector<Vec5> same(20, Vec5{1, 2, 3, 4, 5});
        const auto s = fit_standardiser(same);
        CHECK(s.mean == Vec5{1, 2, 3, 4, 5});
        for (double sd : s.stddev) CHECK(sd == kDefaultSigmaFloor);
    }
    SUBCASE("symmetric pair") {
        const std::vector<Vec5> pair{Vec5{0, 0, 0, 0, 0}, Vec5{2, 2, 2, 2, 2}};
        const auto s = fit_standardiser(pair);
        for (double m : s.mean) CHECK(m == 1.0);
        for (double sd : s.stddev) CHECK(sd == 1.0);
    }
    SUBCASE("random vectors against a two-pass oracle") {
        Rng rng(8);
        std::vector<Vec5> xs(20);
        for (auto& x : xs) {
            for (double& v : x) v = rng.uniform(-50, 1e6);
        }
        const auto s = fit_standardiser(xs);
        for (std::size_t j = 0; j < 5; ++j) {
            long double m = 0;
            for (const auto& x : xs) m += x[j];
            m /= 20;
            long double var = 0;
            for (const auto& x : xs) var += (x[j] - m) * (x[j] - m);
            CHECK(s.mean[j] == doctest::Approx(double(m)).epsilon(1e-13));
            CHECK(s.stddev[j] == doctest::Approx(double(std::sqrt(var / 20))).epsilon(1e-12));
        }
    }
    SUBCASE("standardise") {
        Standardiser s;
        s.mean = {1, -2, 3.5, 0, 1e7};
        s.stddev = {2, 0.5, 1, 4, 1e5};
        CHECK(standardise(s.mean, s) == Vec5{0, 0, 0, 0, 0});
        Vec5 plus;
        for (std::size_t j = 0; j < 5; ++j) plus[j] = s.mean[j] + s.stddev[j];
        CHECK(standardise(plus, s) == Vec5{1, 1, 1, 1, 1});
        const Vec5 f{4, -1, 0, 10, 1.2e7};
        const auto z = standardise(f, s);
        for (std::size_t j = 0; j < 5; ++j) CHECK(z[j] == doctest::Approx((f[j] - s.mean[j]) / s.stddev[j]));
    }
    SUBCASE("too few vectors") {
        const std::vector<Vec5> one(1);
        CHECK_THROWS_AS(fit_standardiser(one), ValidationError);
    }
}

TEST_CASE("feature tables round trip bit-exactly") {
    Rng rng(12);
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 30; ++i) {
        FeatureRow r;
        r.image_id = "img_" + std::to_string(i);
        r.artist_id = "a" + std::to_string(i % 3);
        r.split = i % 4 ? "train" : "test";
        r.features = {rng.uniform(0, 3e9), rng.uniform(0, 8), rng.uniform(0, 0.5), rng.uniform(0, 1),
                      rng.uniform(0, 2), rng.below(5) == 0};
        rows.push_back(r);
    }
    CHECK(features_from_csv(features_to_csv(rows)) == rows);
    CHECK(features_from_json(features_to_json(rows)) == rows);
}
