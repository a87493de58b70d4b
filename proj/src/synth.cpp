#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "phishbench/errors.hpp"
#include "phishbench/manip.hpp"
#include "phishbench/png_io.hpp"
#include "phishbench/synth.hpp"

namespace phishbench {
namespace fs = std::filesystem;
namespace {

using Glyph = std::array<const char*, 7>;

const std::map<char, Glyph>& font() {
    static const std::map<char, Glyph> f = {
        {'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
        {'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
        {'C', {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
        {'D', {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."}},
        {'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
        {'F', {"#####", "#....", "#....", "####.", "#....", "#....", "#...."}},
        {'G', {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"}},
        {'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
        {'I', {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
        {'J', {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
        {'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
        {'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
        {'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
        {'N', {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"}},
        {'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
        {'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
        {'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
        {'R', {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
        {'S', {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
        {'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
        {'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
        {'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
        {'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."}},
        {'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
        {'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
        {'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
        {'a', {".....", ".....", ".###.", "....#", ".####", "#...#", ".####"}},
        {'b', {"#....", "#....", "#.##.", "##..#", "#...#", "#...#", "####."}},
        {'c', {".....", ".....", ".###.", "#....", "#....", "#...#", ".###."}},
        {'d', {"....#", "....#", ".##.#", "#..##", "#...#", "#...#", ".####"}},
        {'e', {".....", ".....", ".###.", "#...#", "#####", "#....", ".###."}},
        {'f', {"..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#..."}},
        {'g', {".....", ".####", "#...#", "#...#", ".####", "....#", ".###."}},
        {'h', {"#....", "#....", "#.##.", "##..#", "#...#", "#...#", "#...#"}},
        {'i', {"..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."}},
        {'j', {"...#.", ".....", "..##.", "...#.", "...#.", "#..#.", ".##.."}},
        {'k', {"#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."}},
        {'l', {".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
        {'m', {".....", ".....", "##.#.", "#.#.#", "#.#.#", "#...#", "#...#"}},
        {'n', {".....", ".....", "#.##.", "##..#", "#...#", "#...#", "#...#"}},
        {'o', {".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."}},
        {'p', {".....", ".....", "####.", "#...#", "####.", "#....", "#...."}},
        {'q', {".....", ".....", ".##.#", "#..##", ".####", "....#", "....#"}},
        {'r', {".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."}},
        {'s', {".....", ".....", ".###.", "#....", ".###.", "....#", "####."}},
        {'t', {".#...", ".#...", "###..", ".#...", ".#...", ".#..#", "..##."}},
        {'u', {".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#"}},
        {'v', {".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
        {'w', {".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#."}},
        {'x', {".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"}},
        {'y', {".....", ".....", "#...#", "#...#", ".####", "....#", ".###."}},
        {'z', {".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"}},
        {'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
        {'1', {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."}},
        {'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
        {'3', {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."}},
        {'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
        {'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
        {'6', {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."}},
        {'7', {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
        {'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
        {'9', {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."}},
        {'-', {".....", ".....", ".....", "#####", ".....", ".....", "....."}},
    };
    return f;
}

Rgb random_color(SeedStream& rng, int lo, int hi) {
    auto c = [&] { return static_cast<std::uint8_t>(lo + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)))); };
    const auto r = c(), g = c(), b = c();
    return {r, g, b};
}

// Strongly chromatic colour: one channel high, one low, one anywhere.
Rgb saturated(SeedStream& rng) {
    std::array<std::uint8_t, 3> c{};
    const auto hi = rng.uniform_index(3);
    const auto lo = (hi + 1 + rng.uniform_index(2)) % 3;
    for (std::size_t k = 0; k < 3; ++k) c[k] = static_cast<std::uint8_t>(rng.uniform_index(256));
    c[hi] = static_cast<std::uint8_t>(200 + rng.uniform_index(56));
    c[lo] = static_cast<std::uint8_t>(rng.uniform_index(60));
    return c;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IOError("cannot write " + path.string());
    f << text;
}

std::string capitalized(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

RgbaImage render_text(std::string_view text, int scale, Rgb color, bool bold) {
    const int advance = 6 * scale;
    const int w = std::max(1, static_cast<int>(text.size()) * advance - scale + (bold ? scale : 0));
    const int h = 7 * scale;
    RgbaImage img(w, h, {0, 0, 0, 0});
    const RgbaImage::Pixel ink{color[0], color[1], color[2], 255};
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto it = font().find(text[i]);
        if (it == font().end()) continue;
        for (int gy = 0; gy < 7; ++gy)
            for (int gx = 0; gx < 5; ++gx) {
                if (it->second[static_cast<std::size_t>(gy)][gx] != '#') continue;
                const int extra = bold ? scale : 0;
                for (int dy = 0; dy < scale; ++dy)
                    for (int dx = 0; dx < scale + extra; ++dx) {
                        const int x = static_cast<int>(i) * advance + gx * scale + dx;
                        if (x < w) img.set_pixel(x, gy * scale + dy, ink);
                    }
            }
    }
    return img;
}

std::vector<std::string> synth_brand_names(std::size_t n, std::uint64_t seed) {
    static constexpr std::string_view consonants = "bcdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    static const std::set<std::string> reserved = {"login", "https", "email", "password", "signin"};
    SeedStream rng(seed, "synth", "brands");
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < n) {
        std::string name;
        const std::size_t syllables = 3 + rng.uniform_index(2);  // 6 or 8 letters
        for (std::size_t s = 0; s < syllables; ++s) {
            name += consonants[rng.uniform_index(consonants.size())];
            name += vowels[rng.uniform_index(vowels.size())];
        }
        if (rng.uniform_index(2)) name.pop_back();  // odd lengths too
        if (reserved.contains(name) || !seen.insert(name).second) continue;
        out.push_back(name);
    }
    return out;
}

RgbaImage synth_logo(const std::string& brand, std::uint64_t seed) {
    SeedStream rng(seed, "synth", "logo/" + brand);
    const std::array<Rgb, 4> palette = {saturated(rng), saturated(rng), saturated(rng), random_color(rng, 0, 90)};
    const RgbaImage text = render_text(brand, 2, palette[3]);
    const int icon = 44;
    const int w = 4 + icon + 8 + text.width() + 6, h = 52;
    RgbaImage logo(w, h, {255, 255, 255, 255});
    for (int by = 0; by < icon / 4; ++by)
        for (int bx = 0; bx < icon / 4; ++bx) {
            const Rgb c = palette[rng.uniform_index(3)];
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 4; ++x) logo.set_pixel(4 + bx * 4 + x, 4 + by * 4 + y, {c[0], c[1], c[2], 255});
        }
    const int tx = 4 + icon + 8, ty = (h - text.height()) / 2;
    for (int y = 0; y < text.height(); ++y)
        for (int x = 0; x < text.width(); ++x)
            if (text.at(x, y)[3]) logo.set_pixel(tx + x, ty + y, text.pixel(x, y));
    return logo;
}

SynthPage synth_page(const std::string& brand, const RgbaImage& logo, std::uint64_t seed, std::uint64_t variation) {
    SeedStream rng(seed, "synth", "page/" + brand);
    SeedStream jitter(seed, "synth", "page/" + brand + "/" + std::to_string(variation));
    const int W = 400, H = 300;
    const Rgb bg = random_color(rng, 215, 250);
    const Rgb header = random_color(rng, 20, 140);
    const Rgb accent = saturated(rng);
    RgbImage page(W, H, bg);
    fill(page, {0, 0, W, 64}, header);

    SynthPage out;
    const int lx = 12, ly = 6;
    RgbImage flat = flatten(logo);
    paste(page, flat, lx, ly);
    out.logo = {lx, ly, std::min(logo.width(), W - lx), std::min(logo.height(), H - ly), 1.0};

    const int dx = variation ? static_cast<int>(jitter.uniform_index(9)) - 4 : 0;
    const int dy = variation ? static_cast<int>(jitter.uniform_index(9)) - 4 : 0;
    const RgbaImage title = render_text("Sign in", 2, {40, 40, 40});
    composite(page, title, 130 + dx, 80 + dy);
    const Rect form{100 + dx, 110 + dy, 200, 130};
    fill(page, form, {255, 255, 255});
    for (int k = 0; k < 2; ++k) {
        const Rect field{form.x + 16, form.y + 16 + k * 34, 168, 22};
        fill(page, field, {150, 150, 150});
        fill(page, {field.x + 1, field.y + 1, field.w - 2, field.h - 2}, {250, 250, 250});
    }
    const Rect button{form.x + 16, form.y + 88, 168, 26};
    fill(page, button, accent);
    composite(page, render_text("Log in", 1, {255, 255, 255}), button.x + 66, button.y + 9);
    // Footer text lines.
    const int lines = variation ? 2 + static_cast<int>(jitter.uniform_index(2)) : 2;
    for (int k = 0; k < lines; ++k) {
        const int len = 120 + static_cast<int>((variation ? jitter : rng).uniform_index(140));
        fill(page, {20, 256 + k * 12, len, 4}, {170, 170, 170});
    }
    out.image = std::move(page);
    return out;
}

std::string synth_html(const std::string& brand) {
    const std::string name = capitalized(brand);
    return "<!doctype html>\n<html><head><title>" + name +
           " | Sign in</title>\n<style>body { font-family: sans-serif; }</style>\n"
           "<script>window.dataLayer = [];</script></head>\n<body>\n<h1>" +
           name + "</h1>\n<form method=\"post\"><label>Email</label><input name=\"email\">\n"
           "<label>Password</label><input type=\"password\" name=\"password\">\n"
           "<button>Log in</button></form>\n<p>Sign in to continue to " +
           name + ". &copy; " + name + "</p>\n</body></html>\n";
}

SynthPaths write_synthetic_corpus(const SynthOptions& options, const fs::path& dir) {
    if (options.brands < 2) throw ValidationError("a synthetic corpus needs at least two brands");
    if (options.samples_per_brand < 1) throw ValidationError("samples_per_brand must be at least 1");
    SynthPaths p;
    p.root = fs::absolute(dir).lexically_normal();
    p.manifest = p.root / "manifest.tsv";
    p.refs = p.root / "refs";
    p.plan = p.root / "plan.tsv";
    p.assets = p.root / "assets";
    for (const auto& d : {p.refs, p.assets, p.root / "samples", p.root / "html"}) fs::create_directories(d);

    DatasetManifest manifest;
    manifest.seed = options.seed;
    manifest.provenance = "synthetic corpus: " + std::to_string(options.brands) + " brands x " +
                          std::to_string(options.samples_per_brand) + " samples";
    manifest.base_dir = p.root;
    std::string plan = "# sample_id\tkind\tparams\n";

    for (const auto& brand : synth_brand_names(options.brands, options.seed)) {
        const RgbaImage logo = synth_logo(brand, options.seed);
        const fs::path bdir = p.refs / brand;
        fs::create_directories(bdir / "logos");
        fs::create_directories(bdir / "screenshots");
        write_png(bdir / "logos" / "logo.png", logo);
        write_png(bdir / "screenshots" / "home.png", synth_page(brand, logo, options.seed, 0).image);
        write_text_file(bdir / "domains.txt", brand + ".com\n");

        const fs::path font_asset = p.assets / (brand + "-font.png");
        const fs::path case_asset = p.assets / (brand + "-case.png");
        SeedStream rng(options.seed, "synth", "text/" + brand);
        write_png(font_asset, render_text(brand, 2, random_color(rng, 0, 90), true));
        write_png(case_asset, render_text(upper(brand), 2, random_color(rng, 0, 90)));

        for (std::size_t k = 0; k < options.samples_per_brand; ++k) {
            ScreenshotSample s;
            s.id = brand + "-" + std::to_string(k);
            const SynthPage page = synth_page(brand, logo, options.seed, k + 1);
            s.image = page.image;
            s.image_path = p.root / "samples" / (s.id + ".png");
            s.url = "https://www." + brand + ".com/login";
            s.html_path = p.root / "html" / (s.id + ".html");
            s.brand = brand;
            s.logo_region = page.logo;
            s.cluster_id = brand;
            write_png(s.image_path, s.image);
            write_text_file(*s.html_path, synth_html(brand));
            for (const auto kind : kAllManipulationKinds) {
                std::string params;
                if (kind == ManipulationKind::FontReplace) params = "asset=" + font_asset.generic_string();
                if (kind == ManipulationKind::CaseConversion) params = "asset=" + case_asset.generic_string();
                plan += s.id + "\t" + std::string(to_string(kind)) + "\t" + params + "\n";
            }
            manifest.entries.push_back(std::move(s));
        }
    }
    save_manifest(manifest, p.manifest);
    write_text_file(p.plan, plan);
    return p;
}

}  // namespace phishbench
