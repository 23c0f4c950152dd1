#include "sketchauth/imgproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "sketchauth/error.hpp"

namespace sketchauth {

namespace {

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// Weights and tap offsets for one output coordinate along one axis.
struct CubicTaps {
    int first = 0;
    std::array<double, 4> weight{};
};

std::vector<CubicTaps> cubic_taps(int in_size, int out_size) {
    std::vector<CubicTaps> taps(static_cast<std::size_t>(out_size));
    const double scale = static_cast<double>(in_size) / out_size;
    for (int o = 0; o < out_size; ++o) {
        const double src = (o + 0.5) * scale - 0.5;
        const double base = std::floor(src);
        const double t = src - base;
        CubicTaps& tp = taps[static_cast<std::size_t>(o)];
        tp.first = static_cast<int>(base) - 1;
        tp.weight = {cubic_weight(t + 1.0), cubic_weight(t), cubic_weight(1.0 - t), cubic_weight(2.0 - t)};
    }
    return taps;
}

// The centre tap is used as reference so that constant signals come out bit-exact.
double apply_taps(const CubicTaps& tp, const auto& sample, int n) {
    const double centre = sample(clamp_index(tp.first + 1, n));
    double acc = centre;
    for (int k = 0; k < 4; ++k) {
        acc += tp.weight[static_cast<std::size_t>(k)] * (sample(clamp_index(tp.first + k, n)) - centre);
    }
    return acc;
}

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

enum class Direction { horizontal, diagonal_up, vertical, diagonal_down };

// Quantise a gradient angle to one of four NMS directions.
Direction quantise(double gx, double gy) {
    double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
    if (deg < 0) deg += 180.0;
    if (deg < 22.5 || deg >= 157.5) return Direction::horizontal;
    if (deg < 67.5) return Direction::diagonal_up;
    if (deg < 112.5) return Direction::vertical;
    return Direction::diagonal_down;
}

} // namespace

std::size_t EdgeMap::count() const {
    return static_cast<std::size_t>(std::count(edges.begin(), edges.end(), std::uint8_t{1}));
}

void CannyParams::validate() const {
    if (!(sigma > 0.0)) throw ValidationError("canny: sigma must be positive");
    if (!(t_low > 0.0 && t_low < t_high)) throw ValidationError("canny: thresholds must satisfy 0 < t_low < t_high");
}

GreyImage to_grey_normalised(const RgbImage& img) {
    if (!img.valid()) throw ValidationError("to_grey_normalised: invalid RGB raster");
    GreyImage out(img.width, img.height);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = img.pixels[3 * i];
        const double g = img.pixels[3 * i + 1];
        const double b = img.pixels[3 * i + 2];
        if (r == g && g == b) {
            out.pixels[i] = r / 255.0;
        } else {
            out.pixels[i] = std::clamp((0.299 * r + 0.587 * g + 0.114 * b) / 255.0, 0.0, 1.0);
        }
    }
    return out;
}

double cubic_weight(double distance) {
    constexpr double a = -0.5;
    const double x = std::abs(distance);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

GreyImage resize_bicubic(const GreyImage& img, int out_width, int out_height) {
    if (img.width < 4 || img.height < 4) {
        throw ValidationError("resize_bicubic: image " + std::to_string(img.width) + "x" +
                              std::to_string(img.height) + " is smaller than 4x4");
    }
    if (out_width < 1 || out_height < 1) throw ValidationError("resize_bicubic: empty target size");

    const auto col_taps = cubic_taps(img.width, out_width);
    const auto row_taps = cubic_taps(img.height, out_height);

    GreyImage horiz(out_width, img.height);
    for (int r = 0; r < img.height; ++r) {
        auto sample = [&](int c) { return img.at(r, c); };
        for (int c = 0; c < out_width; ++c) {
            horiz.at(r, c) = apply_taps(col_taps[static_cast<std::size_t>(c)], sample, img.width);
        }
    }

    GreyImage out(out_width, out_height);
    for (int c = 0; c < out_width; ++c) {
        auto sample = [&](int r) { return horiz.at(r, c); };
        for (int r = 0; r < out_height; ++r) {
            out.at(r, c) = std::clamp(apply_taps(row_taps[static_cast<std::size_t>(r)], sample, img.height), 0.0, 1.0);
        }
    }
    return out;
}

GreyImage gaussian_blur(const GreyImage& img, double sigma) {
    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);

    GreyImage tmp(img.width, img.height);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] * img.at(r, clamp_index(c + k, img.width));
            }
            tmp.at(r, c) = acc;
        }
    }
    GreyImage out(img.width, img.height);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] * tmp.at(clamp_index(r + k, img.height), c);
            }
            out.at(r, c) = acc;
        }
    }
    return out;
}

namespace {

struct Gradients {
    GreyImage gx, gy, magnitude;
};

Gradients sobel_normalised(const GreyImage& img, double sigma) {
    const GreyImage blurred = gaussian_blur(img, sigma);
    const int w = img.width;
    const int h = img.height;
    Gradients g{GreyImage(w, h), GreyImage(w, h), GreyImage(w, h)};
    double max_mag = 0.0;
    for (int r = 0; r < h; ++r) {
        const int ru = clamp_index(r - 1, h);
        const int rd = clamp_index(r + 1, h);
        for (int c = 0; c < w; ++c) {
            const int cl = clamp_index(c - 1, w);
            const int cr = clamp_index(c + 1, w);
            const double gx = (blurred.at(ru, cr) + 2.0 * blurred.at(r, cr) + blurred.at(rd, cr)) -
                              (blurred.at(ru, cl) + 2.0 * blurred.at(r, cl) + blurred.at(rd, cl));
            const double gy = (blurred.at(rd, cl) + 2.0 * blurred.at(rd, c) + blurred.at(rd, cr)) -
                              (blurred.at(ru, cl) + 2.0 * blurred.at(ru, c) + blurred.at(ru, cr));
            g.gx.at(r, c) = gx;
            g.gy.at(r, c) = gy;
            const double m = std::hypot(gx, gy);
            g.magnitude.at(r, c) = m;
            max_mag = std::max(max_mag, m);
        }
    }
    if (max_mag > 0.0) {
        for (double& m : g.magnitude.pixels) m /= max_mag;
    }
    return g;
}

} // namespace

GreyImage canny_magnitude(const GreyImage& img, double sigma) { return sobel_normalised(img, sigma).magnitude; }

EdgeMap canny(const GreyImage& img, const CannyParams& params) {
    params.validate();
    const int w = img.width;
    const int h = img.height;
    EdgeMap out(w, h);
    if (w == 0 || h == 0) return out;

    const Gradients g = sobel_normalised(img, params.sigma);
    const GreyImage& mag = g.magnitude;

    auto mag_at = [&](int r, int c) {
        if (r < 0 || r >= h || c < 0 || c >= w) return 0.0;
        return mag.at(r, c);
    };

    // 0 = suppressed, 1 = weak, 2 = strong
    std::vector<std::uint8_t> cls(static_cast<std::size_t>(w) * h, 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double m = mag.at(r, c);
            if (m < params.t_low) continue;
            double before = 0.0;
            double after = 0.0;
            switch (quantise(g.gx.at(r, c), g.gy.at(r, c))) {
            case Direction::horizontal:
                before = mag_at(r, c - 1);
                after = mag_at(r, c + 1);
                break;
            case Direction::diagonal_up:
                before = mag_at(r - 1, c - 1);
                after = mag_at(r + 1, c + 1);
                break;
            case Direction::vertical:
                before = mag_at(r - 1, c);
                after = mag_at(r + 1, c);
                break;
            case Direction::diagonal_down:
                before = mag_at(r - 1, c + 1);
                after = mag_at(r + 1, c - 1);
                break;
            }
            // strict on one side so a two-pixel plateau keeps exactly one pixel
            if (m > before && m >= after) {
                cls[static_cast<std::size_t>(r) * w + c] = m >= params.t_high ? 2 : 1;
            }
        }
    }

    std::vector<int> stack;
    for (int i = 0; i < w * h; ++i) {
        if (cls[static_cast<std::size_t>(i)] == 2) {
            out.edges[static_cast<std::size_t>(i)] = 1;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const int r = i / w;
        const int c = i % w;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const int rr = r + dr;
                const int cc = c + dc;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                const std::size_t j = static_cast<std::size_t>(rr) * w + cc;
                if (cls[j] == 1 && !out.edges[j]) {
                    out.edges[j] = 1;
                    stack.push_back(static_cast<int>(j));
                }
            }
        }
    }
    return out;
}

} // namespace sketchauth
