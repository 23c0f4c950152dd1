#include "sketchauth/ingest.hpp"

#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include <curl/curl.h>
#include <jpeglib.h>
#include <openssl/evp.h>
#include <png.h>

#include <json.hpp>

#include "sketchauth/error.hpp"

namespace sketchauth {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view split_name(Split s) { return s == Split::train ? "train" : "test"; }

std::vector<const ImageEntry*> ArtistRecord::split_images(Split s) const {
    std::vector<const ImageEntry*> out;
    for (const auto& e : images) {
        if (e.split == s) out.push_back(&e);
    }
    return out;
}

const ArtistRecord* DatasetManifest::find(std::string_view artist_id) const {
    for (const auto& a : artists) {
        if (a.artist_id == artist_id) return &a;
    }
    return nullptr;
}

std::size_t DatasetManifest::image_count() const {
    std::size_t n = 0;
    for (const auto& a : artists) n += a.images.size();
    return n;
}

void validate_manifest(const DatasetManifest& m) {
    if (m.artists.empty()) throw ValidationError("manifest: no artists");
    if (m.n_train < 1 || m.n_test < 1) throw ValidationError("manifest: n_train and n_test must be positive");
    std::set<std::string> artist_ids;
    std::set<std::string> image_ids;  // features are keyed by image_id, so unique across artists
    for (const auto& a : m.artists) {
        if (a.artist_id.empty()) throw ValidationError("manifest: empty artist_id");
        if (!artist_ids.insert(a.artist_id).second) {
            throw ValidationError("manifest: duplicate artist_id '" + a.artist_id + "'");
        }
        int n_train = 0;
        int n_test = 0;
        for (const auto& e : a.images) {
            if (e.image_id.empty()) throw ValidationError("manifest: artist '" + a.artist_id + "' has an empty image_id");
            if (!image_ids.insert(e.image_id).second) {
                throw ValidationError("manifest: duplicate image_id '" + e.image_id + "' in artist '" + a.artist_id + "'");
            }
            (e.split == Split::train ? n_train : n_test) += 1;
        }
        auto check = [&](int have, int want, const char* split) {
            if (have == want) return;
            const int diff = want - have;
            throw ValidationError("manifest: artist '" + a.artist_id + "' has " + std::to_string(have) + " " + split +
                                  " images, expected " + std::to_string(want) +
                                  (diff > 0 ? " (short by " + std::to_string(diff) + ")"
                                            : " (" + std::to_string(-diff) + " too many)"));
        };
        check(n_train, m.n_train, "train");
        check(n_test, m.n_test, "test");
    }
}

DatasetManifest parse_manifest(std::string_view text) {
    DatasetManifest m;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ValidationError("manifest: top level must be an object");
        m.version = j.value("version", std::string{});
        m.n_train = j.value("n_train", 20);
        m.n_test = j.value("n_test", 9);
        if (!j.contains("artists") || !j["artists"].is_array()) throw ValidationError("manifest: missing artists array");
        for (const auto& ja : j["artists"]) {
            ArtistRecord a;
            a.artist_id = ja.at("artist_id").get<std::string>();
            a.display_name = ja.value("display_name", a.artist_id);
            for (const auto& ji : ja.at("images")) {
                ImageEntry e;
                e.image_id = ji.at("image_id").get<std::string>();
                const auto split = ji.at("split").get<std::string>();
                if (split == "train") {
                    e.split = Split::train;
                } else if (split == "test") {
                    e.split = Split::test;
                } else {
                    throw ValidationError("manifest: image '" + e.image_id + "' has unknown split '" + split + "'");
                }
                e.path = ji.at("path").get<std::string>();
                if (ji.contains("source_url") && !ji["source_url"].is_null()) {
                    e.source_url = ji["source_url"].get<std::string>();
                }
                if (ji.contains("sha256") && !ji["sha256"].is_null()) e.sha256 = ji["sha256"].get<std::string>();
                a.images.push_back(std::move(e));
            }
            m.artists.push_back(std::move(a));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("manifest: malformed document: ") + e.what());
    }
    validate_manifest(m);
    return m;
}

std::string serialise_manifest(const DatasetManifest& m) {
    json j;
    j["version"] = m.version;
    j["n_train"] = m.n_train;
    j["n_test"] = m.n_test;
    j["artists"] = json::array();
    for (const auto& a : m.artists) {
        json ja;
        ja["artist_id"] = a.artist_id;
        ja["display_name"] = a.display_name;
        ja["images"] = json::array();
        for (const auto& e : a.images) {
            json ji;
            ji["image_id"] = e.image_id;
            ji["split"] = std::string(split_name(e.split));
            ji["path"] = e.path.generic_string();
            if (e.source_url) ji["source_url"] = *e.source_url;
            if (e.sha256) ji["sha256"] = *e.sha256;
            ja["images"].push_back(std::move(ji));
        }
        j["artists"].push_back(std::move(ja));
    }
    return j.dump(2) + "\n";
}

// ---- files ----

std::vector<std::uint8_t> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& p) {
    const auto bytes = read_file(p);
    return {bytes.begin(), bytes.end()};
}

void write_file(const fs::path& p, std::span<const std::uint8_t> bytes) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + p.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RuntimeFailure("write failed for " + p.string());
}

void write_text(const fs::path& p, const std::string& text) {
    write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw RuntimeFailure("sha256: digest computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

// ---- codecs ----

namespace {

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw RuntimeFailure(std::string("png decode: ") + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    RgbImage img(static_cast<int>(image.width), static_cast<int>(image.height));
    if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw RuntimeFailure("png decode: " + msg);
    }
    return img;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
    auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
    (*info->err->format_message)(info, err->message);
    std::longjmp(err->jump, 1);
}

RgbImage decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    RgbImage img;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw RuntimeFailure(std::string("jpeg decode: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    img.width = static_cast<int>(cinfo.output_width);
    img.height = static_cast<int>(cinfo.output_height);
    img.pixels.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * img.width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

} // namespace

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t png_magic[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (bytes.size() >= 8 && std::equal(std::begin(png_magic), std::end(png_magic), bytes.begin())) {
        return decode_png(bytes);
    }
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return decode_jpeg(bytes);
    throw RuntimeFailure("decode: unsupported image format (PNG and JPEG only)");
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
    if (!img.valid()) throw ValidationError("encode_png: invalid raster");
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
        throw RuntimeFailure(std::string("png encode: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
        throw RuntimeFailure(std::string("png encode: ") + image.message);
    }
    out.resize(size);
    return out;
}

// ---- loading ----

namespace {

std::size_t curl_write(char* data, std::size_t size, std::size_t n, void* user) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(user);
    out->insert(out->end(), data, data + size * n);
    return size * n;
}

} // namespace

void fetch_url(const std::string& url, const fs::path& dest) {
    CURL* curl = curl_easy_init();
    if (!curl) throw RuntimeFailure("fetch: curl initialisation failed");
    std::vector<std::uint8_t> body;
    curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, curl_write);
    curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
    const CURLcode rc = curl_easy_perform(curl);
    curl_easy_cleanup(curl);
    if (rc != CURLE_OK) throw RuntimeFailure("fetch: " + url + ": " + curl_easy_strerror(rc));
    write_file(dest, body);
}

RgbImage load_image(const ImageEntry& entry, const LoadOptions& opts) {
    const fs::path local = entry.path.is_absolute() || opts.base_dir.empty() ? entry.path : opts.base_dir / entry.path;
    std::vector<std::uint8_t> bytes;
    if (!entry.path.empty() && fs::exists(local)) {
        bytes = read_file(local);
    } else if (entry.source_url) {
        const fs::path cached = opts.cache_dir / entry.sha256.value_or(entry.image_id);
        if (!fs::exists(cached)) {
            if (!opts.allow_fetch) {
                throw RuntimeFailure("image '" + entry.image_id + "': " + local.string() +
                                     " not found and not cached; fetching is disabled");
            }
            fetch_url(*entry.source_url, cached);
        }
        bytes = read_file(cached);
    } else {
        throw RuntimeFailure("image '" + entry.image_id + "': " + local.string() + " not found and no source_url");
    }

    if (entry.sha256) {
        const std::string got = sha256_hex(bytes);
        if (got != *entry.sha256) {
            throw RuntimeFailure("image '" + entry.image_id + "': sha256 mismatch (expected " + *entry.sha256 +
                                 ", got " + got + ")");
        }
    }
    try {
        return decode_image(bytes);
    } catch (const RuntimeFailure& e) {
        throw RuntimeFailure("image '" + entry.image_id + "': " + e.what());
    }
}

} // namespace sketchauth
