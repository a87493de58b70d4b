#include <algorithm>

#include "doctest.h"

#include "phishbench/manip.hpp"
#include "phishbench/synth.hpp"
#include "support.hpp"

using namespace phishbench;
using namespace testsupport;

namespace {

struct Corpus {
    TempDir dir;
    SynthPaths paths;
    DatasetManifest manifest;
    ReferenceList refs;
    std::vector<PlanLine> plan;

    explicit Corpus(std::size_t brands) {
        SynthOptions o;
        o.brands = brands;
        o.seed = 17;
        paths = write_synthetic_corpus(o, dir.path());
        manifest = load_manifest(paths.manifest);
        refs = load_reference_list(paths.refs, ReferenceVariant::base);
        plan = read_plan(paths.plan);
    }
};

Corpus& corpus() {
    static Corpus c(5);
    return c;
}

ScreenshotSample sample_with(const RgbImage& img, Rect region) {
    ScreenshotSample s;
    s.id = "t";
    s.image = img;
    s.logo_region = LogoRegion{region.x, region.y, region.w, region.h, 1.0};
    return s;
}

ManipulationResult apply(const ScreenshotSample& s, const std::string& kind, const std::string& params = "",
                         std::uint64_t seed = 1) {
    SeedStream rng(seed, "manip", s.id + "@" + kind);
    return apply_manipulation(s, ManipulationSpec::parse(kind, params), corpus().refs, rng);
}

bool covered(const std::vector<Rect>& rects, int x, int y) {
    return std::any_of(rects.begin(), rects.end(), [&](const Rect& r) { return r.contains(x, y); });
}

}  // namespace

TEST_CASE("every planned manipulation preserves size and stays inside its declared regions") {
    auto& c = corpus();
    REQUIRE(c.plan.size() == c.manifest.entries.size() * kAllManipulationKinds.size());
    for (const auto& line : c.plan) {
        const ScreenshotSample* s = c.manifest.find(line.sample_id);
        REQUIRE(s != nullptr);
        const auto spec = ManipulationSpec::parse(line.kind, line.params);
        SeedStream rng(17, "manip", s->id + "@" + line.kind);
        const auto r = apply_manipulation(*s, spec, c.refs, rng);
        CAPTURE(r.sample.id);
        CHECK(r.sample.id == s->id + "@" + line.kind);
        CHECK(r.sample.metadata.at("manipulation") == line.kind);
        CHECK(r.sample.metadata.at("source_id") == s->id);
        CHECK(r.sample.url == s->url);
        REQUIRE(r.sample.image.width() == s->image.width());
        REQUIRE(r.sample.image.height() == s->image.height());
        CHECK(r.sample.logo_region->rect().inside(s->image.width(), s->image.height()));
        std::size_t outside = 0, changed = 0;
        for (int y = 0; y < s->image.height(); ++y)
            for (int x = 0; x < s->image.width(); ++x)
                if (r.sample.image.pixel(x, y) != s->image.pixel(x, y)) {
                    ++changed;
                    outside += !covered(r.affected, x, y);
                }
        CHECK(outside == 0);
        CHECK(changed > 0);
    }
}

TEST_CASE("same seed gives bit-identical output, other seeds may differ") {
    auto& c = corpus();
    const auto& s = c.manifest.entries[0];
    for (const char* kind : {"Resizing", "Integration", "Reposition", "Replacement"}) {
        CAPTURE(kind);
        CHECK(apply(s, kind, "", 5).sample == apply(s, kind, "", 5).sample);
    }
}

TEST_CASE("elimination fills the region with the sampled background") {
    auto& c = corpus();
    for (const auto& s : c.manifest.entries) {
        const auto r = apply(s, "Elimination");
        const Rect region = s.logo_region->rect();
        const Rgb bg = sample_background_color(s.image, region).color;
        for (int y = region.y; y < region.y + region.h; ++y)
            for (int x = region.x; x < region.x + region.w; ++x) REQUIRE(r.sample.image.pixel(x, y) == bg);
    }
}

TEST_CASE("flip twice restores the region; rotation by 0 with nearest neighbour is identity") {
    auto& c = corpus();
    for (const auto& s : c.manifest.entries) {
        for (const char* axis : {"axis=horizontal", "axis=vertical"}) {
            const auto once = apply(s, "Flipping", axis);
            ScreenshotSample again = once.sample;
            again.id = s.id;
            const auto twice = apply(again, "Flipping", axis);
            CHECK(twice.sample.image == s.image);
        }
        CHECK(apply(s, "Rotation", "angle=0;interp=nearest").sample.image == s.image);
    }
}

TEST_CASE("rotation fills uncovered corners with the background colour") {
    SeedStream rng(4);
    RgbImage img(60, 60, {255, 255, 255});
    paste(img, noise(30, 30, rng), 15, 15);
    const auto s = sample_with(img, {15, 15, 30, 30});
    const auto r = apply(s, "Rotation", "angle=10");
    // Top-left corner of the region maps outside the source under a 10 degree turn.
    CHECK(r.sample.image.pixel(15, 15) == Rgb{255, 255, 255});
    CHECK_THROWS_AS(ManipulationSpec::parse("Rotation", "angle=15"), ValidationError);
}

TEST_CASE("blurring never increases total variation") {
    auto& c = corpus();
    SeedStream rng(8);
    std::vector<RgbImage> images;
    for (const auto& s : c.manifest.entries) images.push_back(s.image);
    images.push_back(noise(37, 23, rng));
    images.push_back(blocks(50, 50, 5, rng));
    for (const auto& img : images) {
        const auto blurred = gaussian_blur(img, 9);
        CHECK(total_variation(blurred) <= total_variation(img));
    }
    const auto taps = gaussian_taps(9);
    double sum = 0;
    for (double t : taps) sum += t;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // sigma = 0.3 * (4 - 1) + 0.8 = 1.7
    CHECK(taps[4] / taps[5] == doctest::Approx(std::exp(1.0 / (2 * 1.7 * 1.7))));
}

TEST_CASE("scaling by 1.1 redraws at floor(1.1 w) x floor(1.1 h) anchored top-left") {
    auto& c = corpus();
    const auto& s = c.manifest.entries[1];
    const auto r = apply(s, "Scaling");
    const Rect before = s.logo_region->rect();
    const Rect after = r.sample.logo_region->rect();
    CHECK(after.x == before.x);
    CHECK(after.y == before.y);
    CHECK(after.w == static_cast<int>(1.1 * before.w));
    CHECK(after.h == static_cast<int>(1.1 * before.h));
}

TEST_CASE("background sampling") {
    SUBCASE("uniform white ring") {
        RgbImage img(20, 20, {255, 255, 255});
        fill(img, {5, 5, 10, 10}, {3, 4, 5});
        const auto bg = sample_background_color(img, {5, 5, 10, 10});
        CHECK(bg.color == Rgb{255, 255, 255});
        CHECK_FALSE(bg.fallback);
    }
    SUBCASE("half black, half white ring matches a brute-force median") {
        RgbImage img(20, 20, {0, 0, 0});
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 20; ++x)
                if ((x + y) % 2) img.set_pixel(x, y, {255, 255, 255});
        const Rect region{6, 6, 6, 6};
        std::vector<int> ring;
        for (int y = 4; y < 14; ++y)
            for (int x = 4; x < 14; ++x)
                if (!region.contains(x, y)) ring.push_back(img.pixel(x, y)[0]);
        std::sort(ring.begin(), ring.end());
        const int lower_median = ring[(ring.size() - 1) / 2];
        CHECK(sample_background_color(img, region).color == Rgb{static_cast<std::uint8_t>(lower_median),
                                                                 static_cast<std::uint8_t>(lower_median),
                                                                 static_cast<std::uint8_t>(lower_median)});
    }
    SUBCASE("whole-image region falls back to the global median") {
        RgbImage img(3, 1, {10, 10, 10});
        img.set_pixel(1, 0, {20, 20, 20});
        img.set_pixel(2, 0, {30, 30, 30});
        const auto bg = sample_background_color(img, {0, 0, 3, 1});
        CHECK(bg.fallback);
        CHECK(bg.color == Rgb{20, 20, 20});
    }
}

TEST_CASE("colour replacement remaps exactly the modal-hue pixels") {
    RgbImage img(40, 30, {255, 255, 255});
    const Rect region{10, 5, 20, 20};
    // Red block, a smaller green block and grey text-like pixels.
    fill(img, {10, 5, 12, 20}, {220, 30, 30});
    fill(img, {22, 5, 8, 8}, {30, 200, 40});
    fill(img, {22, 15, 8, 5}, {90, 90, 90});
    const auto s = sample_with(img, region);
    const auto r = apply(s, "ColorReplace", "target=#0000ff");

    const Rgb bg = sample_background_color(img, region).color;
    std::array<int, 12> counts{};
    for (int y = region.y; y < region.y + region.h; ++y)
        for (int x = region.x; x < region.x + region.w; ++x) {
            const Rgb p = img.pixel(x, y);
            int diff = 0;
            for (int ch = 0; ch < 3; ++ch) diff = std::max(diff, std::abs(p[ch] - bg[ch]));
            if (hue_bucket(p) >= 0 && diff > 24) ++counts[hue_bucket(p)];
        }
    const int modal = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    CHECK(modal == 0);
    int changed = 0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const bool mask = hue_bucket(img.pixel(x, y)) == modal && region.contains(x, y);
            const bool diff = r.sample.image.pixel(x, y) != img.pixel(x, y);
            CHECK(mask == diff);
            changed += diff;
        }
    CHECK(changed == counts[0]);
    CHECK(r.resolved.at("changed_pixels") == std::to_string(counts[0]));
    CHECK(hue_bucket(r.sample.image.pixel(12, 10)) == hue_bucket({0, 0, 255}));
}

TEST_CASE("hue buckets") {
    CHECK(hue_bucket({255, 0, 0}) == 0);
    CHECK(hue_bucket({0, 255, 0}) == 4);
    CHECK(hue_bucket({0, 0, 255}) == 8);
    CHECK(hue_bucket({100, 100, 120}) == -1);
}

TEST_CASE("plan and parameter validation") {
    CHECK_THROWS_AS(ManipulationSpec::parse("Blurring", "kernel=8"), ValidationError);
    CHECK_THROWS_AS(ManipulationSpec::parse("Blurring", "factor=2"), ValidationError);
    CHECK_THROWS_AS(ManipulationSpec::parse("Elimination+Flipping", ""), ValidationError);
    CHECK_THROWS_AS(ManipulationSpec::parse("Unknown", ""), ValidationError);
    CHECK_THROWS_AS(ManipulationSpec::parse("FontReplace", ""), ValidationError);
    CHECK_THROWS_AS(ManipulationSpec::parse("Omission", "split=1"), ValidationError);
    const auto spec = ManipulationSpec::parse("rotation", "angle=-2.5;interp=nearest");
    CHECK(spec.kind == ManipulationKind::Rotation);
    CHECK(spec.params_string() == "angle=-2.5;interp=nearest");
    CHECK(ManipulationSpec::defaults(ManipulationKind::Blurring).params_string() == "kernel=9");
    CHECK(ManipulationSpec::defaults(ManipulationKind::Scaling).params_string() == "factor=1.1");
    CHECK(ManipulationSpec::defaults(ManipulationKind::Rotation).params_string() == "angle=1;interp=bilinear");

    auto s = corpus().manifest.entries[0];
    s.logo_region.reset();
    CHECK_THROWS_AS(apply(s, "Elimination"), RegionError);
}
