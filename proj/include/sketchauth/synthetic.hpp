#pragma once

#include <cstdint>
#include <filesystem>

#include "sketchauth/imgproc.hpp"
#include "sketchauth/ingest.hpp"

namespace sketchauth {

/// Drawing style of one synthetic "artist": paper tone, ink, stroke statistics, hatching, grain.
struct SyntheticStyle {
    double paper = 0.85;        // background luminance
    double ink = 0.2;           // stroke luminance
    int strokes = 40;           // random-walk strokes per image
    int stroke_steps = 60;      // steps per stroke
    double wobble = 0.3;        // heading change per step (radians, std)
    double stroke_radius = 1.0; // pixels
    double hatch_period = 8.0;  // pixels
    double hatch_amplitude = 0.0;
    double grain = 0.02;        // per-pixel noise std
    double tint = 0.0;          // warm/cool shift of the paper
};

/// Ten clearly separated styles.
SyntheticStyle synthetic_style(int family);

RgbImage render_synthetic(const SyntheticStyle& style, std::uint64_t seed, int size = 256);

struct SyntheticCorpusSpec {
    int artists = 10;
    int n_train = 20;
    int n_test = 9;
    int size = 256;
    std::uint64_t seed = 7;
};

/// Writes images/<artist>/<image>.png and manifest.json (with sha256) under dir.
DatasetManifest write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticCorpusSpec& spec);

} // namespace sketchauth
