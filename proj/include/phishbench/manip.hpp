#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "phishbench/core.hpp"
#include "phishbench/random.hpp"

namespace phishbench {

enum class ManipulationKind {
    Elimination,
    ColorReplace,
    Resizing,
    Rotation,
    Integration,
    Reposition,
    Flipping,
    Replacement,
    Blurring,
    Scaling,
    Omission,
    FontReplace,
    CaseConversion,
};

inline constexpr std::array kAllManipulationKinds = {
    ManipulationKind::Elimination, ManipulationKind::ColorReplace, ManipulationKind::Resizing,
    ManipulationKind::Rotation,    ManipulationKind::Integration,  ManipulationKind::Reposition,
    ManipulationKind::Flipping,    ManipulationKind::Replacement,  ManipulationKind::Blurring,
    ManipulationKind::Scaling,     ManipulationKind::Omission,     ManipulationKind::FontReplace,
    ManipulationKind::CaseConversion,
};

std::string_view to_string(ManipulationKind kind);
ManipulationKind parse_manipulation_kind(std::string_view text);

using FillColor = Rgb;

enum class FlipAxis { horizontal, vertical };
enum class Placement { above, below, left };
enum class Anchor { left, center, right };
enum class OmissionKeep { icon, text };

struct EliminationParams {};
struct ColorReplaceParams {
    FillColor target{0, 0, 255};
};
/// Height-to-width ratio multiplier; drawn from {0.75, 1.25, 1.5} when unset.
struct ResizingParams {
    std::optional<double> ratio;
};
/// Degrees, positive = clockwise, must lie in (-15, 15).
struct RotationParams {
    double angle = 1.0;
    Interpolation interp = Interpolation::bilinear;
};
struct IntegrationParams {
    std::optional<Placement> position;
    std::optional<std::string> brand;
};
struct RepositionParams {
    std::optional<Anchor> anchor;
};
struct FlippingParams {
    FlipAxis axis = FlipAxis::horizontal;
};
/// Either a pre-rendered asset or a logo drawn from another brand.
struct ReplacementParams {
    std::optional<std::filesystem::path> asset;
    std::optional<std::string> brand;
};
struct BlurringParams {
    int kernel = 9;
};
struct ScalingParams {
    double factor = 1.1;
};
/// `split` is the icon/text boundary as a fraction of the logo width; the
/// icon is the left part.
struct OmissionParams {
    OmissionKeep keep = OmissionKeep::icon;
    double split = 0.3;
};
/// Pre-rendered text raster for FontReplace / CaseConversion.
struct TextAssetParams {
    std::filesystem::path asset;
};

using ManipulationParams =
    std::variant<EliminationParams, ColorReplaceParams, ResizingParams, RotationParams, IntegrationParams,
                 RepositionParams, FlippingParams, ReplacementParams, BlurringParams, ScalingParams, OmissionParams,
                 TextAssetParams>;

struct ManipulationSpec {
    ManipulationKind kind = ManipulationKind::Elimination;
    ManipulationParams params;

    /// Default parameters for `kind`.
    static ManipulationSpec defaults(ManipulationKind kind);
    /// Parses `param=value;...` for `kind`. Unknown keys and out-of-range
    /// values raise ValidationError.
    static ManipulationSpec parse(std::string_view kind, std::string_view params);
    /// Throws ValidationError if params do not belong to kind or are out of range.
    void validate() const;
    std::string params_string() const;
};

/// Border-ring median colour around a region.
struct BackgroundSample {
    FillColor color{};
    bool fallback = false;  // ring empty; global median used instead
};

/// Per-channel (lower) median of the pixels in a 2-pixel ring around `region`,
/// clipped at the image edge.
BackgroundSample sample_background_color(const RgbImage& image, const Rect& region);

struct ManipulationResult {
    ScreenshotSample sample;
    /// Rectangles whose pixels may differ from the input. Blurring reports
    /// the whole image.
    std::vector<Rect> affected;
    /// Resolved parameters, including random draws.
    std::map<std::string, std::string> resolved;
};

/// Applies one visible manipulation. The output keeps the input's url and
/// html, gets id `<id>@<kind>` and carries `kind` + resolved params in its
/// metadata. The logo region of the output follows the logo where it moved.
ManipulationResult apply_manipulation(const ScreenshotSample& sample, const ManipulationSpec& spec,
                                      const ReferenceList& refs, SeedStream& rng);

/// Gaussian blur with an odd kernel size and sigma = 0.3((k-1)/2 - 1) + 0.8.
/// Borders use symmetric reflection (edge pixel repeated), which keeps the
/// total variation of the output at or below the input's.
RgbImage gaussian_blur(const RgbImage& image, int kernel);

/// Normalised 1-D Gaussian taps for `kernel` with the sigma rule above.
std::vector<double> gaussian_taps(int kernel, double sigma = 0.0);

/// Hue bucket (0..11, 30 degrees wide, bucket 0 centred on red) of a pixel,
/// or -1 for achromatic pixels (max - min channel < 32).
int hue_bucket(Rgb p);

// Batch plan: `sample_id<TAB>kind<TAB>param=value;...`, `*` = every sample.
struct PlanLine {
    std::string sample_id;
    std::string kind;
    std::string params;
};
std::vector<PlanLine> read_plan(const std::filesystem::path& path);

}  // namespace phishbench
