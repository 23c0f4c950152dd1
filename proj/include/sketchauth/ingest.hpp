#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sketchauth/imgproc.hpp"

namespace sketchauth {

enum class Split { train, test };

struct ImageEntry {
    std::string image_id;
    Split split = Split::train;
    std::filesystem::path path;
    std::optional<std::string> source_url;
    std::optional<std::string> sha256;  // lowercase hex

    bool operator==(const ImageEntry&) const = default;
};

struct ArtistRecord {
    std::string artist_id;
    std::string display_name;
    std::vector<ImageEntry> images;

    std::vector<const ImageEntry*> split_images(Split s) const;
    bool operator==(const ArtistRecord&) const = default;
};

struct DatasetManifest {
    std::string version;
    int n_train = 20;
    int n_test = 9;
    std::vector<ArtistRecord> artists;

    const ArtistRecord* find(std::string_view artist_id) const;
    std::size_t image_count() const;
    bool operator==(const DatasetManifest&) const = default;
};

std::string_view split_name(Split s);

/// Parses and validates a JSON manifest. Throws ValidationError naming the offending
/// artist or image.
DatasetManifest parse_manifest(std::string_view text);
std::string serialise_manifest(const DatasetManifest& m);

/// Checks id uniqueness and per-artist split counts.
void validate_manifest(const DatasetManifest& m);

struct LoadOptions {
    std::filesystem::path base_dir;   // relative entry paths resolve against this
    std::filesystem::path cache_dir;  // cache_dir/<sha256-or-image_id>
    bool allow_fetch = false;
};

/// Reads the entry from disk (or the cache, or the network when allowed), verifies the digest
/// and decodes PNG or JPEG.
RgbImage load_image(const ImageEntry& entry, const LoadOptions& opts);

/// Decode by magic number; PNG and JPEG only.
RgbImage decode_image(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RgbImage& img);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& p);
std::string read_text(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& p, const std::string& text);

/// Downloads url to dest via libcurl. Only called when fetching was explicitly enabled.
void fetch_url(const std::string& url, const std::filesystem::path& dest);

} // namespace sketchauth
