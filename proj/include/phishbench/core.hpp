#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phishbench/image.hpp"

namespace phishbench {

/// Ground-truth (or detector-predicted) logo bounding box.
struct LogoRegion {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    double confidence = 1.0;

    Rect rect() const noexcept { return {x, y, w, h}; }
    friend bool operator==(const LogoRegion&, const LogoRegion&) = default;
};

/// One corpus item. Manipulated variants carry what was done to them in
/// `metadata`.
struct ScreenshotSample {
    std::string id;
    RgbImage image;
    std::filesystem::path image_path;
    std::string url;
    std::optional<std::filesystem::path> html_path;
    std::optional<std::string> brand;
    std::optional<LogoRegion> logo_region;
    std::optional<std::string> cluster_id;
    std::map<std::string, std::string> metadata;

    friend bool operator==(const ScreenshotSample&, const ScreenshotSample&) = default;
};

/// Throws AssetError when the sample violates its invariants.
void validate(const ScreenshotSample& sample);

struct DatasetManifest {
    std::vector<ScreenshotSample> entries;
    std::string provenance;
    std::uint64_t seed = 0;
    bool seed_recorded = false;  // a `# seed:` header was present
    std::filesystem::path base_dir;

    const ScreenshotSample* find(std::string_view id) const;
};

/// Reads the line-delimited manifest and decodes every referenced image.
///
/// Header lines `# seed: <u64>` and `# provenance: <text>` are recognised;
/// other `#` lines and blank lines are skipped. Relative paths resolve
/// against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Same as load_manifest but leaves `image` empty; used where only the
/// descriptors are needed.
DatasetManifest load_manifest_descriptors(const std::filesystem::path& path);

/// Writes `manifest` to `path`; image paths are written relative to the
/// manifest's directory when possible. Images themselves are not written.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

std::string format_manifest_line(const ScreenshotSample& s, const std::filesystem::path& base_dir);

enum class ReferenceVariant { base, extended };
std::string_view to_string(ReferenceVariant v);
ReferenceVariant parse_reference_variant(std::string_view text);

struct NamedLogo {
    std::string file;
    RgbaImage image;
};
struct NamedScreenshot {
    std::string file;
    RgbImage image;
};

struct BrandReference {
    std::string brand;
    std::vector<NamedLogo> logos;
    std::vector<NamedScreenshot> screenshots;
    std::vector<std::string> domains;
};

struct ReferenceList {
    ReferenceVariant variant = ReferenceVariant::base;
    std::filesystem::path root;
    std::map<std::string, BrandReference> brands;

    const BrandReference* find(std::string_view brand) const;
    std::size_t logo_count() const;
    std::size_t screenshot_count() const;
};

/// Loads `<root>/<brand>/{logos,screenshots}/*.png` and `<root>/<brand>/domains.txt`.
ReferenceList load_reference_list(const std::filesystem::path& dir, ReferenceVariant variant);

/// Writes a reference list back out in the same directory layout.
void save_reference_list(const ReferenceList& refs, const std::filesystem::path& dir);

/// Throws ValidationError unless every brand of `base` is present in `extended`.
void check_superset(const ReferenceList& base, const ReferenceList& extended);

enum class Label { benign, phishing };
std::string_view to_string(Label l);
Label parse_label(std::string_view text);

/// Detector output. `brand` is set iff the label is phishing.
struct Verdict {
    Label label = Label::benign;
    std::optional<std::string> brand;
    double score = 0.0;
    double elapsed = 0.0;  // seconds, detector call only
    std::optional<Rect> box;

    static Verdict benign(double score) { return {Label::benign, std::nullopt, score, 0.0, std::nullopt}; }
    static Verdict phishing(std::string brand, double score) { return {Label::phishing, std::move(brand), score, 0.0, std::nullopt}; }
    bool is_phishing() const noexcept { return label == Label::phishing; }
};

/// Checks the Verdict invariants against the reference list used for the
/// run; returns an explanation on failure.
std::optional<std::string> verdict_problem(const Verdict& v, const ReferenceList& refs);

/// Lower-cases and validates a registrable-domain string (no scheme, no path).
std::string normalize_domain(std::string_view text);

}  // namespace phishbench
