#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sketchauth {

/// 8-bit RGB raster, row-major, three interleaved channels per pixel.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* at(int row, int col) { return &pixels[(static_cast<std::size_t>(row) * width + col) * 3]; }
    const std::uint8_t* at(int row, int col) const {
        return &pixels[(static_cast<std::size_t>(row) * width + col) * 3];
    }
    bool valid() const {
        return width > 0 && height > 0 && pixels.size() == static_cast<std::size_t>(width) * height * 3;
    }
};

/// Normalised luminance raster with values in [0,1], row-major.
struct GreyImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    GreyImage() = default;
    GreyImage(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    std::size_t size() const { return pixels.size(); }
};

struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> edges;

    EdgeMap() = default;
    EdgeMap(int w, int h) : width(w), height(h), edges(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int row, int col) const { return edges[static_cast<std::size_t>(row) * width + col] != 0; }
    void set(int row, int col, bool v = true) { edges[static_cast<std::size_t>(row) * width + col] = v ? 1 : 0; }
    std::size_t count() const;
};

struct CannyParams {
    double sigma = 1.0;
    double t_low = 0.10;
    double t_high = 0.20;

    void validate() const;
};

inline constexpr int kCanonicalSize = 224;

/// P = (0.299 R + 0.587 G + 0.114 B) / 255.
GreyImage to_grey_normalised(const RgbImage& img);

/// Keys cubic convolution (a = -0.5), half-pixel aligned grid, clamped borders.
/// Output is clamped to [0,1]. Throws ValidationError for inputs smaller than 4x4.
GreyImage resize_bicubic(const GreyImage& img, int out_width = kCanonicalSize, int out_height = kCanonicalSize);

/// Keys kernel weight for a = -0.5.
double cubic_weight(double distance);

/// Separable Gaussian blur, radius ceil(3 sigma), clamped borders.
GreyImage gaussian_blur(const GreyImage& img, double sigma);

/// Gaussian blur, Sobel, max-normalised magnitude, 4-direction NMS, double threshold,
/// 8-connected hysteresis.
EdgeMap canny(const GreyImage& img, const CannyParams& params = {});

/// Max-normalised Sobel magnitude of the blurred image (the values the thresholds act on).
GreyImage canny_magnitude(const GreyImage& img, double sigma);

} // namespace sketchauth
