#include "sketchauth/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <json.hpp>

#include "sketchauth/error.hpp"
#include "text_util.hpp"

namespace sketchauth {

using nlohmann::json;

namespace {

std::vector<std::complex<double>> twiddles(int n) {
    std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double angle = -2.0 * std::numbers::pi * k / n;
        w[static_cast<std::size_t>(k)] = {std::cos(angle), std::sin(angle)};
    }
    return w;
}

} // namespace

Spectrum dft2d(const GreyImage& img) {
    const int rows = img.height;
    const int cols = img.width;
    Spectrum s{cols, rows, std::vector<std::complex<double>>(img.size())};

    // transform along columns index (j -> v) for every row
    const auto wc = twiddles(cols);
    std::vector<std::complex<double>> tmp(img.size());
    for (int i = 0; i < rows; ++i) {
        for (int v = 0; v < cols; ++v) {
            std::complex<double> acc{};
            for (int j = 0; j < cols; ++j) {
                acc += img.at(i, j) * wc[static_cast<std::size_t>((static_cast<long>(v) * j) % cols)];
            }
            tmp[static_cast<std::size_t>(i) * cols + v] = acc;
        }
    }
    // then along rows (i -> u)
    const auto wr = twiddles(rows);
    for (int u = 0; u < rows; ++u) {
        for (int v = 0; v < cols; ++v) {
            std::complex<double> acc{};
            for (int i = 0; i < rows; ++i) {
                acc += tmp[static_cast<std::size_t>(i) * cols + v] *
                       wr[static_cast<std::size_t>((static_cast<long>(u) * i) % rows)];
            }
            s.coefficients[static_cast<std::size_t>(u) * cols + v] = acc;
        }
    }
    return s;
}

double spectral_energy(const Spectrum& spectrum) {
    double e = 0.0;
    for (const auto& c : spectrum.coefficients) e += std::norm(c);
    return e;
}

double fourier_energy(const GreyImage& img) {
    double sq = 0.0;
    for (double p : img.pixels) sq += p * p;
    return static_cast<double>(img.size()) * sq;
}

Histogram256 histogram256(const GreyImage& img) {
    Histogram256 h;
    for (double p : img.pixels) {
        const auto bin = std::min(static_cast<long>(std::floor(p * 256.0)), 255L);
        ++h.counts[static_cast<std::size_t>(std::max(bin, 0L))];
    }
    h.total = img.size();
    return h;
}

double shannon_entropy(const GreyImage& img) {
    const Histogram256 h = histogram256(img);
    if (h.total == 0) return 0.0;
    double entropy = 0.0;
    for (std::size_t c : h.counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(h.total);
        entropy -= p * std::log2(p);
    }
    return std::max(entropy, 0.0);
}

double contrast(const GreyImage& img) {
    if (img.size() == 0) return 0.0;
    const double n = static_cast<double>(img.size());
    // shifted by the first pixel so constant images give exactly zero
    const double shift = img.pixels.front();
    double mean = 0.0;
    for (double p : img.pixels) mean += p - shift;
    mean /= n;
    double var = 0.0;
    for (double p : img.pixels) var += (p - shift - mean) * (p - shift - mean);
    return std::sqrt(var / n);
}

void GlcmParams::validate() const {
    if (levels < 2) throw ValidationError("glcm: levels must be >= 2");
    if (distance < 1) throw ValidationError("glcm: distance must be >= 1");
}

std::vector<int> quantise_levels(const GreyImage& img, int levels) {
    std::vector<int> q(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const long level = static_cast<long>(std::floor(img.pixels[i] * levels));
        q[i] = static_cast<int>(std::clamp(level, 0L, static_cast<long>(levels - 1)));
    }
    return q;
}

std::array<GlcmMatrix, 4> glcm_matrices(const GreyImage& img, const GlcmParams& params) {
    params.validate();
    const int d = params.distance;
    if (img.width <= d || img.height <= d) {
        throw ValidationError("glcm: image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                              " has no pixel pairs at distance " + std::to_string(d));
    }
    const int L = params.levels;
    const auto q = quantise_levels(img, L);
    // (row offset, col offset) for 0, 45, 90, 135 degrees
    constexpr std::array<std::array<int, 2>, 4> dirs{{{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};
    constexpr std::array<int, 4> degrees{0, 45, 90, 135};

    std::array<GlcmMatrix, 4> out;
    for (std::size_t o = 0; o < 4; ++o) {
        const int dr = dirs[o][0] * d;
        const int dc = dirs[o][1] * d;
        std::vector<std::size_t> counts(static_cast<std::size_t>(L) * L, 0);
        std::size_t total = 0;
        for (int r = 0; r < img.height; ++r) {
            const int r2 = r + dr;
            if (r2 < 0 || r2 >= img.height) continue;
            for (int c = 0; c < img.width; ++c) {
                const int c2 = c + dc;
                if (c2 < 0 || c2 >= img.width) continue;
                const int a = q[static_cast<std::size_t>(r) * img.width + c];
                const int b = q[static_cast<std::size_t>(r2) * img.width + c2];
                ++counts[static_cast<std::size_t>(a) * L + b];
                ++counts[static_cast<std::size_t>(b) * L + a];
                total += 2;
            }
        }
        GlcmMatrix& m = out[o];
        m.levels = L;
        m.orientation_deg = degrees[o];
        m.entries.resize(counts.size());
        for (std::size_t k = 0; k < counts.size(); ++k) {
            m.entries[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
        }
    }
    return out;
}

double glcm_homogeneity(const GreyImage& img, const GlcmParams& params) {
    const auto mats = glcm_matrices(img, params);
    double sum = 0.0;
    for (const auto& m : mats) {
        double h = 0.0;
        for (int i = 0; i < m.levels; ++i) {
            for (int j = 0; j < m.levels; ++j) h += m.at(i, j) / (1.0 + std::abs(i - j));
        }
        sum += h;
    }
    return sum / 4.0;
}

BoxCountSeries box_counts(const EdgeMap& edges) {
    BoxCountSeries s;
    for (std::size_t k = 0; k < kBoxSizes.size(); ++k) {
        const int eps = kBoxSizes[k];
        const int bw = (edges.width + eps - 1) / eps;
        const int bh = (edges.height + eps - 1) / eps;
        std::vector<std::uint8_t> hit(static_cast<std::size_t>(bw) * bh, 0);
        for (int r = 0; r < edges.height; ++r) {
            for (int c = 0; c < edges.width; ++c) {
                if (edges.at(r, c)) hit[static_cast<std::size_t>(r / eps) * bw + c / eps] = 1;
            }
        }
        s.counts[k] = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), std::uint8_t{1}));
    }
    return s;
}

FractalEstimate fractal_dimension(const EdgeMap& edges) {
    FractalEstimate est;
    est.series = box_counts(edges);
    if (est.series.counts[0] == 0) {
        est.edgeless = true;
        est.dimension = 0.0;
        return est;
    }
    const std::size_t n = kBoxSizes.size();
    double mx = 0.0;
    double my = 0.0;
    std::array<double, kBoxSizes.size()> xs{};
    std::array<double, kBoxSizes.size()> ys{};
    for (std::size_t k = 0; k < n; ++k) {
        xs[k] = std::log(1.0 / kBoxSizes[k]);
        ys[k] = std::log(static_cast<double>(est.series.counts[k]));
        mx += xs[k];
        my += ys[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxy += (xs[k] - mx) * (ys[k] - my);
        sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    est.dimension = sxy / sxx;
    return est;
}

FeatureBreakdown features_from_grey(const GreyImage& grey, const CannyParams& canny_params,
                                    const GlcmParams& glcm) {
    FeatureBreakdown out;
    out.grey = grey;
    out.features.fourier_energy = fourier_energy(grey);
    out.features.shannon_entropy = shannon_entropy(grey);
    out.features.contrast = contrast(grey);
    out.features.homogeneity = glcm_homogeneity(grey, glcm);
    out.edges = canny(grey, canny_params);
    out.fractal = fractal_dimension(out.edges);
    out.features.fractal_dimension = out.fractal.dimension;
    out.features.edgeless = out.fractal.edgeless;
    return out;
}

FeatureBreakdown extract_features_detailed(const RgbImage& img, const CannyParams& canny_params,
                                           const GlcmParams& glcm) {
    const GreyImage grey = resize_bicubic(to_grey_normalised(img));
    return features_from_grey(grey, canny_params, glcm);
}

FeatureVector extract_features(const RgbImage& img, const CannyParams& canny_params, const GlcmParams& glcm) {
    return extract_features_detailed(img, canny_params, glcm).features;
}

// ---- standardisation ----

Standardiser fit_standardiser(std::span<const Vec5> train, double sigma_floor) {
    if (train.size() < 2) {
        throw ValidationError("fit_standardiser: need at least 2 vectors, got " + std::to_string(train.size()));
    }
    if (!(sigma_floor > 0.0)) throw ValidationError("fit_standardiser: sigma_floor must be positive");
    Standardiser s;
    s.sigma_floor = sigma_floor;
    const double n = static_cast<double>(train.size());
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        double mean = 0.0;
        for (const auto& v : train) mean += v[j];
        mean /= n;
        double var = 0.0;
        for (const auto& v : train) var += (v[j] - mean) * (v[j] - mean);
        s.mean[j] = mean;
        s.stddev[j] = std::max(std::sqrt(var / n), sigma_floor);
    }
    return s;
}

Standardiser fit_standardiser(std::span<const FeatureVector> train, double sigma_floor) {
    std::vector<Vec5> v;
    v.reserve(train.size());
    for (const auto& f : train) v.push_back(f.values());
    return fit_standardiser(std::span<const Vec5>(v), sigma_floor);
}

Vec5 standardise(const Vec5& f, const Standardiser& s) {
    Vec5 x{};
    for (std::size_t j = 0; j < kFeatureCount; ++j) x[j] = (f[j] - s.mean[j]) / s.stddev[j];
    return x;
}

// ---- feature tables ----

namespace {

constexpr const char* kCsvHeader =
    "image_id,artist_id,split,fourier_energy,shannon_entropy,contrast,glcm_homogeneity,fractal_dimension,edgeless";

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("features: cannot parse " + what + " value '" + s + "'");
    }
}

} // namespace

std::string features_to_csv(std::span<const FeatureRow> rows) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : rows) {
        const auto& f = r.features;
        out += r.image_id + "," + r.artist_id + "," + r.split;
        for (double v : f.values()) out += "," + detail::format_double(v);
        out += f.edgeless ? ",1\n" : ",0\n";
    }
    return out;
}

std::vector<FeatureRow> features_from_csv(const std::string& text) {
    const auto ls = detail::lines(text);
    if (ls.empty() || ls.front() != kCsvHeader) throw ValidationError("features csv: missing or unexpected header");
    std::vector<FeatureRow> rows;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto cells = detail::split(ls[i], ',');
        if (cells.size() != 9) throw ValidationError("features csv: line " + std::to_string(i + 1) + " has wrong arity");
        FeatureRow r{cells[0], cells[1], cells[2], {}};
        r.features.fourier_energy = parse_double(cells[3], "fourier_energy");
        r.features.shannon_entropy = parse_double(cells[4], "shannon_entropy");
        r.features.contrast = parse_double(cells[5], "contrast");
        r.features.homogeneity = parse_double(cells[6], "glcm_homogeneity");
        r.features.fractal_dimension = parse_double(cells[7], "fractal_dimension");
        r.features.edgeless = cells[8] == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string features_to_json(std::span<const FeatureRow> rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        json j;
        j["image_id"] = r.image_id;
        j["artist_id"] = r.artist_id;
        j["split"] = r.split;
        const auto v = r.features.values();
        for (std::size_t k = 0; k < kFeatureCount; ++k) j[kFeatureNames[k]] = v[k];
        j["edgeless"] = r.features.edgeless;
        arr.push_back(std::move(j));
    }
    json doc;
    doc["features"] = std::move(arr);
    return doc.dump(2) + "\n";
}

std::vector<FeatureRow> features_from_json(const std::string& text) {
    std::vector<FeatureRow> rows;
    try {
        const json doc = json::parse(text);
        for (const auto& j : doc.at("features")) {
            FeatureRow r;
            r.image_id = j.at("image_id").get<std::string>();
            r.artist_id = j.at("artist_id").get<std::string>();
            r.split = j.at("split").get<std::string>();
            r.features.fourier_energy = j.at(kFeatureNames[0]).get<double>();
            r.features.shannon_entropy = j.at(kFeatureNames[1]).get<double>();
            r.features.contrast = j.at(kFeatureNames[2]).get<double>();
            r.features.homogeneity = j.at(kFeatureNames[3]).get<double>();
            r.features.fractal_dimension = j.at(kFeatureNames[4]).get<double>();
            r.features.edgeless = j.at("edgeless").get<bool>();
            rows.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("features json: ") + e.what());
    }
    return rows;
}

} // namespace sketchauth
