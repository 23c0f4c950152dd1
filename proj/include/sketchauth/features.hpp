#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sketchauth/imgproc.hpp"

namespace sketchauth {

inline constexpr std::size_t kFeatureCount = 5;
using Vec5 = std::array<double, kFeatureCount>;

/// Full 2-D DFT coefficients, F(u,v) stored row-major with u along rows.
struct Spectrum {
    int width = 0;
    int height = 0;
    std::vector<std::complex<double>> coefficients;

    const std::complex<double>& at(int u, int v) const {
        return coefficients[static_cast<std::size_t>(u) * width + v];
    }
};

struct Histogram256 {
    std::array<std::size_t, 256> counts{};
    std::size_t total = 0;
};

struct GlcmParams {
    int levels = 64;
    int distance = 1;

    void validate() const;
};

/// Normalised symmetric co-occurrence matrix for one orientation.
struct GlcmMatrix {
    int levels = 0;
    int orientation_deg = 0;
    std::vector<double> entries;

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * levels + j]; }
};

inline constexpr std::array<int, 6> kBoxSizes{2, 4, 8, 16, 32, 64};

struct BoxCountSeries {
    std::array<int, kBoxSizes.size()> sizes = kBoxSizes;
    std::array<std::size_t, kBoxSizes.size()> counts{};
};

struct FractalEstimate {
    double dimension = 0.0;
    bool edgeless = false;
    BoxCountSeries series;
};

struct FeatureVector {
    double fourier_energy = 0.0;
    double shannon_entropy = 0.0;
    double contrast = 0.0;
    double homogeneity = 0.0;
    double fractal_dimension = 0.0;
    bool edgeless = false;

    Vec5 values() const { return {fourier_energy, shannon_entropy, contrast, homogeneity, fractal_dimension}; }
    bool operator==(const FeatureVector&) const = default;
};

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames{
    "fourier_energy", "shannon_entropy", "contrast", "glcm_homogeneity", "fractal_dimension"};

// ---- spectral energy ----

/// Row-column DFT, O(MN(M+N)).
Spectrum dft2d(const GreyImage& img);

/// Sum of |F(u,v)|^2 over the whole spectrum.
double spectral_energy(const Spectrum& spectrum);

/// Same quantity through Parseval: M*N*sum(P^2). This is what the pipeline uses.
double fourier_energy(const GreyImage& img);

// ---- intensity statistics ----

/// bin = min(floor(P * 256), 255)
Histogram256 histogram256(const GreyImage& img);
double shannon_entropy(const GreyImage& img);

/// Population standard deviation of intensities.
double contrast(const GreyImage& img);

// ---- texture ----

/// level = min(floor(P * L), L - 1)
std::vector<int> quantise_levels(const GreyImage& img, int levels);

/// One matrix per orientation in {0, 45, 90, 135} degrees.
std::array<GlcmMatrix, 4> glcm_matrices(const GreyImage& img, const GlcmParams& params = {});
double glcm_homogeneity(const GreyImage& img, const GlcmParams& params = {});

// ---- fractal complexity ----

BoxCountSeries box_counts(const EdgeMap& edges);

/// OLS slope of log N(eps) against log(1/eps). Empty maps yield 0 with the edgeless flag set.
FractalEstimate fractal_dimension(const EdgeMap& edges);

// ---- composition ----

struct FeatureBreakdown {
    GreyImage grey;  // 224x224 after resize
    EdgeMap edges;
    FeatureVector features;
    FractalEstimate fractal;
};

FeatureVector extract_features(const RgbImage& img, const CannyParams& canny = {}, const GlcmParams& glcm = {});
FeatureBreakdown extract_features_detailed(const RgbImage& img, const CannyParams& canny = {},
                                           const GlcmParams& glcm = {});

/// The five extractors applied to an already preprocessed grey image.
FeatureBreakdown features_from_grey(const GreyImage& grey, const CannyParams& canny = {},
                                    const GlcmParams& glcm = {});

// ---- standardisation ----

inline constexpr double kDefaultSigmaFloor = 1e-8;

struct Standardiser {
    Vec5 mean{};
    Vec5 stddev{1.0, 1.0, 1.0, 1.0, 1.0};
    double sigma_floor = kDefaultSigmaFloor;

    bool operator==(const Standardiser&) const = default;
};

/// Population mean and standard deviation per component; sigma below the floor is replaced by it.
Standardiser fit_standardiser(std::span<const Vec5> train, double sigma_floor = kDefaultSigmaFloor);
Standardiser fit_standardiser(std::span<const FeatureVector> train, double sigma_floor = kDefaultSigmaFloor);

Vec5 standardise(const Vec5& f, const Standardiser& s);
inline Vec5 standardise(const FeatureVector& f, const Standardiser& s) { return standardise(f.values(), s); }

// ---- feature tables ----

struct FeatureRow {
    std::string image_id;
    std::string artist_id;
    std::string split;
    FeatureVector features;

    bool operator==(const FeatureRow&) const = default;
};

std::string features_to_csv(std::span<const FeatureRow> rows);
std::vector<FeatureRow> features_from_csv(const std::string& text);
std::string features_to_json(std::span<const FeatureRow> rows);
std::vector<FeatureRow> features_from_json(const std::string& text);

} // namespace sketchauth
