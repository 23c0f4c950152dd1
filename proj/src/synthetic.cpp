#include "sketchauth/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "sketchauth/error.hpp"
#include "sketchauth/rng.hpp"

namespace sketchauth {

SyntheticStyle synthetic_style(int family) {
    // paper, ink, strokes, steps, wobble, radius, hatch period, hatch amp, grain, tint
    static const std::array<SyntheticStyle, 10> styles{{
        {0.92, 0.15, 12, 90, 0.05, 1.2, 10.0, 0.00, 0.010, 0.02},
        {0.80, 0.30, 60, 40, 0.60, 0.8, 6.0, 0.05, 0.030, 0.04},
        {0.70, 0.10, 30, 70, 0.25, 2.0, 14.0, 0.10, 0.015, 0.06},
        {0.88, 0.45, 120, 25, 0.90, 0.7, 4.0, 0.02, 0.050, -0.02},
        {0.60, 0.05, 20, 120, 0.15, 1.5, 20.0, 0.15, 0.020, 0.08},
        {0.95, 0.55, 200, 15, 1.20, 0.6, 3.0, 0.00, 0.004, 0.00},
        {0.75, 0.25, 8, 150, 0.02, 3.0, 12.0, 0.20, 0.040, 0.03},
        {0.85, 0.05, 80, 50, 0.40, 1.0, 5.0, 0.08, 0.080, -0.04},
        {0.65, 0.35, 45, 80, 0.70, 1.3, 9.0, 0.03, 0.006, 0.05},
        {0.90, 0.20, 160, 35, 0.10, 0.9, 7.0, 0.12, 0.025, 0.01},
    }};
    if (family < 0 || family >= static_cast<int>(styles.size())) {
        throw ValidationError("synthetic_style: family must be in [0, 10)");
    }
    return styles[static_cast<std::size_t>(family)];
}

RgbImage render_synthetic(const SyntheticStyle& style, std::uint64_t seed, int size) {
    Rng rng(seed);
    GreyImage canvas(size, size);

    // per-image jitter of the style
    const double paper = style.paper + rng.uniform(-0.01, 0.01);
    const double ink = style.ink + rng.uniform(-0.02, 0.02);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double hatch_angle = rng.uniform(0.0, std::numbers::pi);
    const double ca = std::cos(hatch_angle);
    const double sa = std::sin(hatch_angle);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double t = (c * ca + r * sa) * 2.0 * std::numbers::pi / style.hatch_period + phase;
            canvas.at(r, c) = paper + style.hatch_amplitude * std::sin(t);
        }
    }

    const int strokes = std::max(1, static_cast<int>(std::lround(style.strokes * rng.uniform(0.9, 1.1))));
    const double rad = style.stroke_radius;
    const int reach = static_cast<int>(std::ceil(rad));
    for (int s = 0; s < strokes; ++s) {
        double x = rng.uniform(0.0, size);
        double y = rng.uniform(0.0, size);
        double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (int k = 0; k < style.stroke_steps; ++k) {
            heading += style.wobble * rng.normal();
            x += std::cos(heading) * 1.5;
            y += std::sin(heading) * 1.5;
            if (x < 0 || x >= size || y < 0 || y >= size) break;
            const int cx = static_cast<int>(x);
            const int cy = static_cast<int>(y);
            for (int dy = -reach; dy <= reach; ++dy) {
                for (int dx = -reach; dx <= reach; ++dx) {
                    const int px = cx + dx;
                    const int py = cy + dy;
                    if (px < 0 || px >= size || py < 0 || py >= size) continue;
                    if (dx * dx + dy * dy > rad * rad + 0.25) continue;
                    canvas.at(py, px) = ink;
                }
            }
        }
    }

    RgbImage img(size, size);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double v = canvas.at(r, c) + style.grain * rng.normal();
            auto to8 = [](double u) {
                return static_cast<std::uint8_t>(std::clamp(std::lround(u * 255.0), 0L, 255L));
            };
            std::uint8_t* px = img.at(r, c);
            px[0] = to8(v + style.tint);
            px[1] = to8(v);
            px[2] = to8(v - style.tint);
        }
    }
    return img;
}

DatasetManifest write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticCorpusSpec& spec) {
    if (spec.artists < 2 || spec.artists > 10) throw ValidationError("synthetic corpus: artists must be in [2, 10]");
    DatasetManifest m;
    m.version = "synthetic-1";
    m.n_train = spec.n_train;
    m.n_test = spec.n_test;
    for (int a = 0; a < spec.artists; ++a) {
        ArtistRecord rec;
        rec.artist_id = "family" + std::to_string(a);
        rec.display_name = "Synthetic family " + std::to_string(a);
        const SyntheticStyle style = synthetic_style(a);
        const int total = spec.n_train + spec.n_test;
        for (int i = 0; i < total; ++i) {
            ImageEntry e;
            e.image_id = rec.artist_id + "_" + (i < 10 ? "0" : "") + std::to_string(i);
            e.split = i < spec.n_train ? Split::train : Split::test;
            e.path = std::filesystem::path("images") / rec.artist_id / (e.image_id + ".png");
            const std::uint64_t seed = splitmix64(spec.seed ^ stable_hash(e.image_id));
            const auto png = encode_png(render_synthetic(style, seed, spec.size));
            e.sha256 = sha256_hex(png);
            write_file(dir / e.path, png);
            rec.images.push_back(std::move(e));
        }
        m.artists.push_back(std::move(rec));
    }
    validate_manifest(m);
    write_text(dir / "manifest.json", serialise_manifest(m));
    return m;
}

} // namespace sketchauth
