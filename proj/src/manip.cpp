#include "phishbench/manip.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "phishbench/png_io.hpp"
#include "phishbench/text.hpp"

namespace fs = std::filesystem;

namespace phishbench {
namespace {

constexpr std::array<std::string_view, 13> kKindNames = {
    "Elimination", "ColorReplace", "Resizing", "Rotation", "Integration", "Reposition", "Flipping",
    "Replacement", "Blurring",     "Scaling",  "Omission", "FontReplace", "CaseConversion",
};

constexpr std::array kResizeRatios = {0.75, 1.25, 1.5};

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string hex_color(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
    return buf;
}

Rgb parse_color(std::string_view text) {
    text = trim(text);
    auto channel = [&](std::string_view part) {
        const double v = parse_real(part);
        if (v < 0 || v > 255 || v != std::floor(v)) throw ValidationError("colour channel out of range");
        return static_cast<std::uint8_t>(v);
    };
    if (text.size() == 7 && text[0] == '#') {
        Rgb c{};
        for (int i = 0; i < 3; ++i) c[i] = static_cast<std::uint8_t>(std::stoi(std::string(text.substr(1 + 2 * i, 2)), nullptr, 16));
        return c;
    }
    const auto parts = split(text, ',');
    if (parts.size() != 3) throw ValidationError("colour must be #rrggbb or r,g,b");
    return {channel(parts[0]), channel(parts[1]), channel(parts[2])};
}

template <class E, std::size_t N>
E parse_enum(std::string_view text, const std::array<std::string_view, N>& names, std::string_view what) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == text) return static_cast<E>(i);
    throw ValidationError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr std::array<std::string_view, 2> kAxisNames = {"horizontal", "vertical"};
constexpr std::array<std::string_view, 3> kPlacementNames = {"above", "below", "left"};
constexpr std::array<std::string_view, 3> kAnchorNames = {"left", "center", "right"};
constexpr std::array<std::string_view, 2> kKeepNames = {"icon", "text"};
constexpr std::array<std::string_view, 2> kInterpNames = {"nearest", "bilinear"};

// HSL helpers, all components in [0, 1] (hue in degrees).
struct Hsl {
    double h, s, l;
};

Hsl to_hsl(Rgb p) {
    const double r = p[0] / 255.0, g = p[1] / 255.0, b = p[2] / 255.0;
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    const double l = (mx + mn) / 2;
    const double d = mx - mn;
    if (d == 0) return {0, 0, l};
    const double s = d / (1 - std::abs(2 * l - 1));
    double h;
    if (mx == r)
        h = 60 * std::fmod((g - b) / d + 6, 6.0);
    else if (mx == g)
        h = 60 * ((b - r) / d + 2);
    else
        h = 60 * ((r - g) / d + 4);
    return {h, s, l};
}

Rgb from_hsl(Hsl c) {
    const double chroma = (1 - std::abs(2 * c.l - 1)) * c.s;
    const double hp = std::fmod(c.h, 360.0) / 60.0;
    const double x = chroma * (1 - std::abs(std::fmod(hp, 2.0) - 1));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = chroma, g = x; break;
        case 1: r = x, g = chroma; break;
        case 2: g = chroma, b = x; break;
        case 3: g = x, b = chroma; break;
        case 4: r = x, b = chroma; break;
        default: r = chroma, b = x; break;
    }
    const double m = c.l - chroma / 2;
    auto q = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255)); };
    return {q(r + m), q(g + m), q(b + m)};
}

int max_channel_diff(Rgb a, Rgb b) {
    int d = 0;
    for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(int(a[c]) - int(b[c])));
    return d;
}

std::pair<int, int> fit_size(int src_w, int src_h, int box_w, int box_h) {
    const double s = std::min(static_cast<double>(box_w) / src_w, static_cast<double>(box_h) / src_h);
    return {std::clamp(static_cast<int>(std::lround(src_w * s)), 1, box_w),
            std::clamp(static_cast<int>(std::lround(src_h * s)), 1, box_h)};
}

// Scales `logo` to fit inside `box` (aspect kept) and composites it centred.
Rect draw_fitted(RgbImage& img, const RgbaImage& logo, const Rect& box) {
    const auto [w, h] = fit_size(logo.width(), logo.height(), box.w, box.h);
    const RgbaImage scaled = (w == logo.width() && h == logo.height()) ? logo : resize(logo, w, h);
    const int x = box.x + (box.w - w) / 2;
    const int y = box.y + (box.h - h) / 2;
    composite(img, scaled, x, y);
    return {x, y, w, h};
}

// Draws an asset-backed logo either from an explicit path or from a
// uniformly chosen other brand.
struct DrawnLogo {
    RgbaImage image;
    std::string source;
};

DrawnLogo draw_other_brand_logo(const ScreenshotSample& sample, const ReferenceList& refs,
                                const std::optional<std::string>& forced, SeedStream& rng) {
    std::vector<const BrandReference*> pool;
    for (const auto& [name, b] : refs.brands) {
        if (b.logos.empty()) continue;
        if (forced ? name == *forced : (!sample.brand || name != *sample.brand)) pool.push_back(&b);
    }
    if (pool.empty())
        throw AssetError(forced ? "brand '" + *forced + "' has no logos" : "no other brand with logos available");
    const auto* brand = pool[rng.uniform_index(pool.size())];
    const auto& logo = brand->logos[rng.uniform_index(brand->logos.size())];
    return {logo.image, brand->brand + "/" + logo.file};
}

RgbaImage load_asset(const fs::path& path) {
    try {
        return read_png_rgba(path);
    } catch (const Error& e) {
        throw AssetError(std::string("cannot load manipulation asset: ") + e.what());
    }
}

int reflect(int i, int n) {
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

RgbImage rotate_region(const RgbImage& logo, double degrees, Interpolation interp, Rgb fill_color) {
    const int w = logo.width(), h = logo.height();
    RgbImage out(w, h, fill_color);
    const double t = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(t), s = std::sin(t);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // Inverse map of a clockwise rotation in y-down coordinates.
            const double dx = x - cx, dy = y - cy;
            const double sx = c * dx + s * dy + cx;
            const double sy = -s * dx + c * dy + cy;
            constexpr double tol = 1e-9;
            if (sx < -tol || sy < -tol || sx > w - 1 + tol || sy > h - 1 + tol) continue;
            auto* d = out.at(x, y);
            if (interp == Interpolation::nearest) {
                const auto* p = logo.at(std::clamp(static_cast<int>(std::lround(sx)), 0, w - 1),
                                        std::clamp(static_cast<int>(std::lround(sy)), 0, h - 1));
                std::copy_n(p, 3, d);
                continue;
            }
            const double fx = std::clamp(sx, 0.0, w - 1.0), fy = std::clamp(sy, 0.0, h - 1.0);
            const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
            const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
            const double ax = fx - x0, ay = fy - y0;
            for (int ch = 0; ch < 3; ++ch) {
                const double top = logo.at(x0, y0)[ch] * (1 - ax) + logo.at(x1, y0)[ch] * ax;
                const double bot = logo.at(x0, y1)[ch] * (1 - ax) + logo.at(x1, y1)[ch] * ax;
                d[ch] = static_cast<std::uint8_t>(std::lround(top * (1 - ay) + bot * ay));
            }
        }
    return out;
}

}  // namespace

std::string_view to_string(ManipulationKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

ManipulationKind parse_manipulation_kind(std::string_view text) {
    text = trim(text);
    if (text.find_first_of("+,&|") != std::string_view::npos)
        throw ValidationError("only one manipulation kind per output is allowed: '" + std::string(text) + "'");
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (to_lower(kKindNames[i]) == to_lower(text)) return static_cast<ManipulationKind>(i);
    throw ValidationError("unknown manipulation kind '" + std::string(text) + "'");
}

ManipulationSpec ManipulationSpec::defaults(ManipulationKind kind) {
    ManipulationSpec s;
    s.kind = kind;
    switch (kind) {
        case ManipulationKind::Elimination: s.params = EliminationParams{}; break;
        case ManipulationKind::ColorReplace: s.params = ColorReplaceParams{}; break;
        case ManipulationKind::Resizing: s.params = ResizingParams{}; break;
        case ManipulationKind::Rotation: s.params = RotationParams{}; break;
        case ManipulationKind::Integration: s.params = IntegrationParams{}; break;
        case ManipulationKind::Reposition: s.params = RepositionParams{}; break;
        case ManipulationKind::Flipping: s.params = FlippingParams{}; break;
        case ManipulationKind::Replacement: s.params = ReplacementParams{}; break;
        case ManipulationKind::Blurring: s.params = BlurringParams{}; break;
        case ManipulationKind::Scaling: s.params = ScalingParams{}; break;
        case ManipulationKind::Omission: s.params = OmissionParams{}; break;
        case ManipulationKind::FontReplace:
        case ManipulationKind::CaseConversion: s.params = TextAssetParams{}; break;
    }
    return s;
}

ManipulationSpec ManipulationSpec::parse(std::string_view kind_text, std::string_view params) {
    ManipulationSpec spec = defaults(parse_manipulation_kind(kind_text));
    for (const auto& item : split(params, ';')) {
        const auto kv = trim(item);
        if (kv.empty()) continue;
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) throw ValidationError("parameter '" + std::string(kv) + "' lacks '='");
        const std::string key(trim(kv.substr(0, eq)));
        const std::string value(trim(kv.substr(eq + 1)));
        auto bad_key = [&]() -> void {
            throw ValidationError("parameter '" + key + "' does not apply to " + std::string(to_string(spec.kind)));
        };
        std::visit(overloaded{
                       [&](EliminationParams&) { bad_key(); },
                       [&](ColorReplaceParams& p) { key == "target" ? void(p.target = parse_color(value)) : bad_key(); },
                       [&](ResizingParams& p) { key == "ratio" ? void(p.ratio = parse_real(value)) : bad_key(); },
                       [&](RotationParams& p) {
                           if (key == "angle") p.angle = parse_real(value);
                           else if (key == "interp") p.interp = parse_enum<Interpolation>(value, kInterpNames, "interpolation");
                           else bad_key();
                       },
                       [&](IntegrationParams& p) {
                           if (key == "position") p.position = parse_enum<Placement>(value, kPlacementNames, "position");
                           else if (key == "brand") p.brand = value;
                           else bad_key();
                       },
                       [&](RepositionParams& p) {
                           key == "anchor" ? void(p.anchor = parse_enum<Anchor>(value, kAnchorNames, "anchor")) : bad_key();
                       },
                       [&](FlippingParams& p) {
                           key == "axis" ? void(p.axis = parse_enum<FlipAxis>(value, kAxisNames, "axis")) : bad_key();
                       },
                       [&](ReplacementParams& p) {
                           if (key == "asset") p.asset = value;
                           else if (key == "brand") p.brand = value;
                           else bad_key();
                       },
                       [&](BlurringParams& p) {
                           if (key != "kernel") bad_key();
                           const double k = parse_real(value);
                           if (k != std::floor(k)) throw ValidationError("kernel must be an integer");
                           p.kernel = static_cast<int>(k);
                       },
                       [&](ScalingParams& p) { key == "factor" ? void(p.factor = parse_real(value)) : bad_key(); },
                       [&](OmissionParams& p) {
                           if (key == "keep") p.keep = parse_enum<OmissionKeep>(value, kKeepNames, "keep");
                           else if (key == "split") p.split = parse_real(value);
                           else bad_key();
                       },
                       [&](TextAssetParams& p) { key == "asset" ? void(p.asset = value) : bad_key(); },
                   },
                   spec.params);
    }
    spec.validate();
    return spec;
}

void ManipulationSpec::validate() const {
    auto expect = [&](bool ok, std::string_view msg) {
        if (!ok) throw ValidationError(std::string(to_string(kind)) + ": " + std::string(msg));
    };
    using K = ManipulationKind;
    std::visit(overloaded{
                   [&](const EliminationParams&) { expect(kind == K::Elimination, "parameter record mismatch"); },
                   [&](const ColorReplaceParams& p) {
                       expect(kind == K::ColorReplace, "parameter record mismatch");
                       expect(hue_bucket(p.target) >= 0, "target colour must be chromatic");
                   },
                   [&](const ResizingParams& p) {
                       expect(kind == K::Resizing, "parameter record mismatch");
                       expect(!p.ratio || *p.ratio > 0, "ratio must be > 0");
                   },
                   [&](const RotationParams& p) {
                       expect(kind == K::Rotation, "parameter record mismatch");
                       expect(p.angle > -15 && p.angle < 15, "angle must lie in (-15, 15)");
                   },
                   [&](const IntegrationParams&) { expect(kind == K::Integration, "parameter record mismatch"); },
                   [&](const RepositionParams&) { expect(kind == K::Reposition, "parameter record mismatch"); },
                   [&](const FlippingParams&) { expect(kind == K::Flipping, "parameter record mismatch"); },
                   [&](const ReplacementParams&) { expect(kind == K::Replacement, "parameter record mismatch"); },
                   [&](const BlurringParams& p) {
                       expect(kind == K::Blurring, "parameter record mismatch");
                       expect(p.kernel >= 3 && p.kernel % 2 == 1, "kernel size must be odd and >= 3");
                   },
                   [&](const ScalingParams& p) {
                       expect(kind == K::Scaling, "parameter record mismatch");
                       expect(p.factor > 0, "scale factor must be > 0");
                   },
                   [&](const OmissionParams& p) {
                       expect(kind == K::Omission, "parameter record mismatch");
                       expect(p.split > 0 && p.split < 1, "split must lie in (0, 1)");
                   },
                   [&](const TextAssetParams& p) {
                       expect(kind == K::FontReplace || kind == K::CaseConversion, "parameter record mismatch");
                       expect(!p.asset.empty(), "a pre-rendered text asset is required");
                   },
               },
               params);
}

std::string ManipulationSpec::params_string() const {
    std::vector<std::string> kv;
    std::visit(overloaded{
                   [&](const EliminationParams&) {},
                   [&](const ColorReplaceParams& p) { kv.push_back("target=" + hex_color(p.target)); },
                   [&](const ResizingParams& p) {
                       if (p.ratio) kv.push_back("ratio=" + format_real(*p.ratio));
                   },
                   [&](const RotationParams& p) {
                       kv.push_back("angle=" + format_real(p.angle));
                       kv.push_back("interp=" + std::string(kInterpNames[static_cast<int>(p.interp)]));
                   },
                   [&](const IntegrationParams& p) {
                       if (p.position) kv.push_back("position=" + std::string(kPlacementNames[static_cast<int>(*p.position)]));
                       if (p.brand) kv.push_back("brand=" + *p.brand);
                   },
                   [&](const RepositionParams& p) {
                       if (p.anchor) kv.push_back("anchor=" + std::string(kAnchorNames[static_cast<int>(*p.anchor)]));
                   },
                   [&](const FlippingParams& p) { kv.push_back("axis=" + std::string(kAxisNames[static_cast<int>(p.axis)])); },
                   [&](const ReplacementParams& p) {
                       if (p.asset) kv.push_back("asset=" + p.asset->generic_string());
                       if (p.brand) kv.push_back("brand=" + *p.brand);
                   },
                   [&](const BlurringParams& p) { kv.push_back("kernel=" + std::to_string(p.kernel)); },
                   [&](const ScalingParams& p) { kv.push_back("factor=" + format_real(p.factor)); },
                   [&](const OmissionParams& p) {
                       kv.push_back("keep=" + std::string(kKeepNames[static_cast<int>(p.keep)]));
                       kv.push_back("split=" + format_real(p.split));
                   },
                   [&](const TextAssetParams& p) { kv.push_back("asset=" + p.asset.generic_string()); },
               },
               params);
    return join(kv, ";");
}

BackgroundSample sample_background_color(const RgbImage& image, const Rect& region) {
    if (!region.inside(image.width(), image.height())) throw RegionError("region outside image");
    const Rect ring = Rect{region.x - 2, region.y - 2, region.w + 4, region.h + 4}.intersect(
        {0, 0, image.width(), image.height()});
    std::array<std::vector<std::uint8_t>, 3> values;
    for (int y = ring.y; y < ring.y + ring.h; ++y)
        for (int x = ring.x; x < ring.x + ring.w; ++x) {
            if (region.contains(x, y)) continue;
            for (int c = 0; c < 3; ++c) values[c].push_back(image.at(x, y)[c]);
        }
    BackgroundSample out;
    if (values[0].empty()) {
        out.fallback = true;
        for (int y = 0; y < image.height(); ++y)
            for (int x = 0; x < image.width(); ++x)
                for (int c = 0; c < 3; ++c) values[c].push_back(image.at(x, y)[c]);
    }
    for (int c = 0; c < 3; ++c) {
        auto& v = values[c];
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
        std::nth_element(v.begin(), mid, v.end());
        out.color[c] = *mid;
    }
    return out;
}

int hue_bucket(Rgb p) {
    const int mx = std::max({p[0], p[1], p[2]});
    const int mn = std::min({p[0], p[1], p[2]});
    if (mx - mn < 32) return -1;
    const double h = to_hsl(p).h;
    return static_cast<int>(std::fmod(h + 15.0, 360.0) / 30.0) % 12;
}

std::vector<double> gaussian_taps(int kernel, double sigma) {
    if (sigma <= 0) sigma = 0.3 * ((kernel - 1) * 0.5 - 1) + 0.8;
    std::vector<double> taps(kernel);
    const int r = kernel / 2;
    double sum = 0;
    for (int i = 0; i < kernel; ++i) sum += taps[i] = std::exp(-((i - r) * (i - r)) / (2 * sigma * sigma));
    for (auto& t : taps) t /= sum;
    return taps;
}

RgbImage gaussian_blur(const RgbImage& image, int kernel) {
    if (kernel < 3 || kernel % 2 == 0) throw ValidationError("blur kernel must be odd and >= 3");
    const auto taps = gaussian_taps(kernel);
    const int r = kernel / 2;
    const int w = image.width(), h = image.height();
    std::vector<double> tmp(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0;
                for (int k = -r; k <= r; ++k) acc += taps[k + r] * image.at(reflect(x + k, w), y)[c];
                tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
            }
    RgbImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0;
                for (int k = -r; k <= r; ++k)
                    acc += taps[k + r] * tmp[(static_cast<std::size_t>(reflect(y + k, h)) * w + x) * 3 + c];
                out.at(x, y)[c] = static_cast<std::uint8_t>(std::lround(std::clamp(acc, 0.0, 255.0)));
            }
    return out;
}

ManipulationResult apply_manipulation(const ScreenshotSample& sample, const ManipulationSpec& spec,
                                      const ReferenceList& refs, SeedStream& rng) {
    spec.validate();
    if (!sample.logo_region) throw RegionError("sample '" + sample.id + "' has no logo region");
    const Rect region = sample.logo_region->rect();
    const int W = sample.image.width(), H = sample.image.height();
    if (!region.inside(W, H)) throw RegionError("sample '" + sample.id + "': logo region outside image");

    ManipulationResult res;
    res.sample = sample;
    res.sample.id = sample.id + "@" + std::string(to_string(spec.kind));
    RgbImage& img = res.sample.image;
    const RgbImage logo = crop(sample.image, region);
    const BackgroundSample bg = sample_background_color(sample.image, region);
    const Rgb fill_color = bg.color;
    auto eliminate = [&] { fill(img, region, fill_color); };
    auto move_region = [&](Rect r) {
        auto& lr = *res.sample.logo_region;
        lr.x = r.x, lr.y = r.y, lr.w = r.w, lr.h = r.h;
    };
    res.affected.push_back(region);

    using K = ManipulationKind;
    switch (spec.kind) {
        case K::Elimination:
            eliminate();
            break;

        case K::ColorReplace: {
            const auto& p = std::get<ColorReplaceParams>(spec.params);
            std::array<std::size_t, 12> counts{};
            for (int y = 0; y < region.h; ++y)
                for (int x = 0; x < region.w; ++x) {
                    const Rgb px = logo.pixel(x, y);
                    const int b = hue_bucket(px);
                    if (b >= 0 && max_channel_diff(px, fill_color) > 24) ++counts[b];
                }
            const auto modal = std::max_element(counts.begin(), counts.end());
            std::size_t changed = 0;
            int source = -1;
            if (*modal > 0) {
                source = static_cast<int>(modal - counts.begin());
                const double target_hue = to_hsl(p.target).h;
                for (int y = 0; y < region.h; ++y)
                    for (int x = 0; x < region.w; ++x) {
                        const Rgb px = logo.pixel(x, y);
                        if (hue_bucket(px) != source || max_channel_diff(px, fill_color) <= 24) continue;
                        Hsl c = to_hsl(px);
                        c.h = target_hue;
                        img.set_pixel(region.x + x, region.y + y, from_hsl(c));
                        ++changed;
                    }
            }
            res.resolved["source_bucket"] = std::to_string(source);
            res.resolved["changed_pixels"] = std::to_string(changed);
            break;
        }

        case K::Resizing: {
            const auto& p = std::get<ResizingParams>(spec.params);
            const double ratio = p.ratio.value_or(kResizeRatios[rng.uniform_index(kResizeRatios.size())]);
            int new_w = region.w;
            int new_h = std::max(1, static_cast<int>(std::lround(region.h * ratio)));
            if (region.y + new_h > H) {
                new_h = H - region.y;
                const double aspect = region.h * ratio / region.w;  // height / width
                new_w = std::clamp(static_cast<int>(std::lround(new_h / aspect)), 1, W - region.x);
            }
            eliminate();
            paste(img, resize(logo, new_w, new_h), region.x, region.y);
            const Rect placed{region.x, region.y, new_w, new_h};
            res.affected.push_back(placed);
            move_region(placed);
            res.resolved["ratio"] = format_real(ratio);
            res.resolved["size"] = std::to_string(new_w) + "x" + std::to_string(new_h);
            break;
        }

        case K::Rotation: {
            const auto& p = std::get<RotationParams>(spec.params);
            paste(img, rotate_region(logo, p.angle, p.interp, fill_color), region.x, region.y);
            break;
        }

        case K::Integration: {
            const auto& p = std::get<IntegrationParams>(spec.params);
            const DrawnLogo second = draw_other_brand_logo(sample, refs, p.brand, rng);
            const int first = static_cast<int>(p.position ? static_cast<std::size_t>(*p.position) : rng.uniform_index(3));
            Rect box{};
            Placement chosen{};
            for (int i = 0; i < 3; ++i) {
                chosen = static_cast<Placement>((first + i) % 3);
                Rect candidate = region;
                switch (chosen) {
                    case Placement::above: candidate.y -= region.h; break;
                    case Placement::below: candidate.y += region.h; break;
                    case Placement::left: candidate.x -= region.w; break;
                }
                box = candidate.intersect({0, 0, W, H});
                if (!box.empty()) break;
            }
            if (box.empty()) throw RegionError("no room to place a second logo next to the original");
            draw_fitted(img, second.image, box);
            res.affected.push_back(box);
            res.resolved["position"] = std::string(kPlacementNames[static_cast<int>(chosen)]);
            res.resolved["second_logo"] = second.source;
            break;
        }

        case K::Reposition: {
            const auto& p = std::get<RepositionParams>(spec.params);
            auto anchor_x = [&](Anchor a) {
                switch (a) {
                    case Anchor::left: return 0;
                    case Anchor::center: return (W - region.w) / 2;
                    case Anchor::right: return W - region.w;
                }
                return region.x;
            };
            Anchor anchor = Anchor::center;
            if (p.anchor) {
                anchor = *p.anchor;
            } else {
                std::vector<Anchor> options;
                for (Anchor a : {Anchor::left, Anchor::center, Anchor::right})
                    if (anchor_x(a) != region.x) options.push_back(a);
                if (!options.empty()) anchor = options[rng.uniform_index(options.size())];
            }
            const Rect placed{anchor_x(anchor), region.y, region.w, region.h};
            eliminate();
            paste(img, logo, placed.x, placed.y);
            res.affected.push_back(placed);
            move_region(placed);
            res.resolved["anchor"] = std::string(kAnchorNames[static_cast<int>(anchor)]);
            break;
        }

        case K::Flipping: {
            const auto& p = std::get<FlippingParams>(spec.params);
            for (int y = 0; y < region.h; ++y)
                for (int x = 0; x < region.w; ++x) {
                    const int sx = p.axis == FlipAxis::horizontal ? region.w - 1 - x : x;
                    const int sy = p.axis == FlipAxis::vertical ? region.h - 1 - y : y;
                    img.set_pixel(region.x + x, region.y + y, logo.pixel(sx, sy));
                }
            break;
        }

        case K::Replacement: {
            const auto& p = std::get<ReplacementParams>(spec.params);
            DrawnLogo repl = p.asset ? DrawnLogo{load_asset(*p.asset), p.asset->generic_string()}
                                     : draw_other_brand_logo(sample, refs, p.brand, rng);
            eliminate();
            draw_fitted(img, repl.image, region);
            res.resolved["replacement"] = repl.source;
            break;
        }

        case K::Blurring: {
            const auto& p = std::get<BlurringParams>(spec.params);
            img = gaussian_blur(sample.image, p.kernel);
            res.affected = {Rect{0, 0, W, H}};
            res.resolved["sigma"] = format_real(0.3 * ((p.kernel - 1) * 0.5 - 1) + 0.8);
            break;
        }

        case K::Scaling: {
            const auto& p = std::get<ScalingParams>(spec.params);
            const int new_w = std::max(1, static_cast<int>(std::floor(p.factor * region.w)));
            const int new_h = std::max(1, static_cast<int>(std::floor(p.factor * region.h)));
            eliminate();
            paste(img, resize(logo, new_w, new_h), region.x, region.y);
            const Rect placed = Rect{region.x, region.y, new_w, new_h}.intersect({0, 0, W, H});
            res.affected.push_back(placed);
            move_region(placed);
            res.resolved["size"] = std::to_string(new_w) + "x" + std::to_string(new_h);
            break;
        }

        case K::Omission: {
            const auto& p = std::get<OmissionParams>(spec.params);
            if (region.w < 2) throw RegionError("logo too narrow to split into icon and text");
            const int cut = std::clamp(static_cast<int>(std::lround(p.split * region.w)), 1, region.w - 1);
            const Rect drop = p.keep == OmissionKeep::icon ? Rect{region.x + cut, region.y, region.w - cut, region.h}
                                                           : Rect{region.x, region.y, cut, region.h};
            fill(img, drop, fill_color);
            res.resolved["cut"] = std::to_string(cut);
            break;
        }

        case K::FontReplace:
        case K::CaseConversion: {
            const auto& p = std::get<TextAssetParams>(spec.params);
            const RgbaImage text = load_asset(p.asset);
            eliminate();
            draw_fitted(img, text, region);
            break;
        }
    }

    auto& md = res.sample.metadata;
    md["manipulation"] = std::string(to_string(spec.kind));
    md["params"] = spec.params_string();
    md["fill"] = hex_color(fill_color);
    md["fill_fallback"] = bg.fallback ? "true" : "false";
    md["source_id"] = sample.id;
    for (const auto& [k, v] : res.resolved) md["resolved." + k] = v;
    return res;
}

std::vector<PlanLine> read_plan(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open plan: " + path.string());
    std::vector<PlanLine> plan;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line.front() == '#') continue;
        auto f = split(line, '\t');
        if (f.size() == 2) f.emplace_back();
        if (f.size() != 3) throw ParseError("plan line needs sample_id<TAB>kind<TAB>params", lineno);
        plan.push_back({f[0], std::string(trim(f[1])), f[2]});
    }
    return plan;
}

}  // namespace phishbench
