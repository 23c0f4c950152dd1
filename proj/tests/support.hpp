#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "sketchauth/imgproc.hpp"
#include "sketchauth/rng.hpp"

namespace testsupport {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("sketchauth_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline sketchauth::GreyImage random_grey(sketchauth::Rng& rng, int w, int h) {
    sketchauth::GreyImage g(w, h);
    for (auto& p : g.pixels) p = rng.uniform();
    return g;
}

inline sketchauth::RgbImage random_rgb(sketchauth::Rng& rng, int w, int h) {
    sketchauth::RgbImage img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

inline sketchauth::GreyImage disc(int size, double cx, double cy, double radius) {
    sketchauth::GreyImage g(size, size);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double dx = c - cx;
            const double dy = r - cy;
            g.at(r, c) = dx * dx + dy * dy <= radius * radius ? 1.0 : 0.0;
        }
    }
    return g;
}

} // namespace testsupport
