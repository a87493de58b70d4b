#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "phishbench/core.hpp"
#include "phishbench/random.hpp"

namespace phishbench {

/// Renders `text` with the built-in 5x7 bitmap font. Unknown characters
/// render as blanks. Background is transparent.
RgbaImage render_text(std::string_view text, int scale, Rgb color, bool bold = false);

/// `n` distinct pronounceable lower-case brand names (5 to 8 letters).
std::vector<std::string> synth_brand_names(std::size_t n, std::uint64_t seed);

/// Opaque logo: a block-textured icon on the left third, the brand name in
/// lower case on the right.
RgbaImage synth_logo(const std::string& brand, std::uint64_t seed);

struct SynthPage {
    RgbImage image;
    LogoRegion logo;
};

/// A login page for `brand` with its logo in the header. `variation` 0 is the
/// canonical reference rendering; other values jitter the layout slightly.
SynthPage synth_page(const std::string& brand, const RgbaImage& logo, std::uint64_t seed, std::uint64_t variation);

std::string synth_html(const std::string& brand);

struct SynthOptions {
    std::size_t brands = 110;
    std::size_t samples_per_brand = 1;
    std::uint64_t seed = 1;
};

struct SynthPaths {
    std::filesystem::path root;
    std::filesystem::path manifest;    // manifest.tsv
    std::filesystem::path refs;        // refs/
    std::filesystem::path plan;        // plan.tsv: every sample x every manipulation kind
    std::filesystem::path assets;      // assets/
};

/// Writes a complete synthetic corpus under `dir`: reference list, sample
/// screenshots and HTML, text assets for the font and case manipulations,
/// a manifest and a manipulation plan.
SynthPaths write_synthetic_corpus(const SynthOptions& options, const std::filesystem::path& dir);

}  // namespace phishbench
