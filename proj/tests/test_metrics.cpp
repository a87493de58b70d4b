#include <cmath>
#include <limits>

#include "doctest.h"

#include "phishbench/manip.hpp"
#include "phishbench/metrics.hpp"
#include "phishbench/synth.hpp"
#include "support.hpp"

using namespace phishbench;
using namespace testsupport;

namespace {

// SSIM for an image exactly one window in size, from the definition.
double single_window_ssim(const std::vector<double>& a, const std::vector<double>& b) {
    double g[11], gs = 0;
    for (int i = 0; i < 11; ++i) gs += g[i] = std::exp(-(i - 5.0) * (i - 5.0) / (2 * 1.5 * 1.5));
    double ma = 0, mb = 0;
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x) {
            const double w = g[x] * g[y] / (gs * gs);
            ma += w * a[y * 11 + x];
            mb += w * b[y * 11 + x];
        }
    double va = 0, vb = 0, cov = 0;
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x) {
            const double w = g[x] * g[y] / (gs * gs);
            va += w * (a[y * 11 + x] - ma) * (a[y * 11 + x] - ma);
            vb += w * (b[y * 11 + x] - mb) * (b[y * 11 + x] - mb);
            cov += w * (a[y * 11 + x] - ma) * (b[y * 11 + x] - mb);
        }
    const double c1 = 6.5025, c2 = 58.5225;
    return (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

EvalRecord record(const std::string& det, const std::string& manip, UrlMode mode, bool phishing,
                  const std::string& brand, const std::string& expected) {
    EvalRecord r;
    r.sample_id = "s-" + manip + "-" + brand;
    r.detector_id = det;
    r.manipulation = manip;
    r.url_mode = mode;
    r.url = "https://x.example/";
    r.expected_brand = expected;
    r.verdict = phishing ? Verdict::phishing(brand, 0.9) : Verdict::benign(0.1);
    r.verdict.elapsed = 0.5;
    return r;
}

}  // namespace

TEST_CASE("rates reproduce known-answer counts") {
    RateCounts c;
    c.n_p = 312355;
    c.n_tp = 204880;
    c.i_tp = 200134;
    const auto r = compute_rates(c);
    CHECK(r.tpr.percent() == "65.59");
    CHECK(r.ident_rate.percent() == "64.07");
    CHECK(r.ident_precision.percent() == "97.68");
    CHECK(r.tpr.cell() == "204,880/312,355 (65.59%)");
    CHECK(*r.tpr.value() == doctest::Approx(0.655904));

    RateCounts b;
    b.n_b = 2500;
    b.n_fp = 2348;
    CHECK(compute_rates(b).fpr.percent() == "93.92");
    CHECK(compute_rates(b).fpr.decimal() == "0.9392");
}

TEST_CASE("empty denominators are undefined, not zero") {
    const auto r = compute_rates(RateCounts{});
    CHECK_FALSE(r.tpr.defined());
    CHECK_FALSE(r.tpr.value());
    CHECK(r.tpr.decimal() == "null");
    CHECK(r.ident_precision.cell() == "0/0 (—)");
    CHECK(same_value(Ratio{1, 2}, Ratio{50, 100}));
    CHECK_FALSE(same_value(Ratio{1, 3}, Ratio{33, 100}));
    CHECK(same_value(Ratio{0, 0}, Ratio{5, 0}));
}

TEST_CASE("rounding is exact half-up") {
    CHECK(Ratio{1, 8}.decimal(2) == "0.13");
    CHECK(Ratio{1, 8}.decimal(3) == "0.125");
    CHECK(Ratio{10, 110}.cell() == "10/110 (9.09%)");
    CHECK(Ratio{3, 110}.cell() == "3/110 (2.73%)");
    CHECK(Ratio{110, 110}.percent() == "100.00");
    CHECK(with_thousands(1234567) == "1,234,567");
    CHECK(with_thousands(999) == "999");
}

TEST_CASE("counts must be nested") {
    RateCounts c;
    c.n_p = 5;
    c.n_tp = 6;
    CHECK_THROWS_AS(compute_rates(c), ValidationError);
    c.n_tp = 4;
    c.i_tp = 5;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("ssim: identity, constant images, single-window closed form") {
    SeedStream rng(1);
    const auto x = noise(30, 20, rng);
    CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    const auto c = solid(16, 16, {77, 77, 77});
    CHECK(ssim(c, c) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> a(121), b(121);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<double>(rng.uniform_index(256));
        b[i] = 255 - a[i];
    }
    const double expect = single_window_ssim(a, b);
    CHECK(expect < 0);
    CHECK(ssim_gray(a, b, 11, 11) == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(ssim(x, noise(20, 30, rng)), ShapeError);
}

TEST_CASE("psnr arithmetic") {
    const auto x = solid(10, 10, {100, 100, 100});
    CHECK(std::isinf(psnr(x, x)));
    CHECK(psnr(x, solid(10, 10, {101, 101, 101})) == doctest::Approx(48.1308).epsilon(1e-5));
    RgbImage half = x;
    fill(half, {0, 0, 5, 10}, {102, 102, 102});
    CHECK(psnr(x, half) == doctest::Approx(10 * std::log10(65025.0 / 2)));
    CHECK(psnr(x, half) == doctest::Approx(45.1205).epsilon(1e-5));
}

TEST_CASE("url-mode accounting") {
    RateCounts c;
    accumulate(c, record("d", "original", UrlMode::squatted, true, "acme", "acme"));
    accumulate(c, record("d", "original", UrlMode::squatted, true, "zeta", "acme"));
    accumulate(c, record("d", "original", UrlMode::squatted, false, "", "acme"));
    accumulate(c, record("d", "original", UrlMode::benign, true, "zeta", "acme"));
    accumulate(c, record("d", "original", UrlMode::benign, true, "acme", "acme"));
    accumulate(c, record("d", "original", UrlMode::benign, false, "", "acme"));
    CHECK(c.n_p == 3);
    CHECK(c.n_tp == 2);
    CHECK(c.i_tp == 1);
    CHECK(c.n_b == 3);
    CHECK(c.n_fp == 2);
    CHECK(c.i_fp == 1);
}

TEST_CASE("records round-trip through the TSV format") {
    TempDir dir;
    auto r = record("emd", "Blurring", UrlMode::squatted, true, "acme", "acme");
    r.verdict.box = Rect{1, 2, 3, 4};
    r.quality = Quality{0.8123456789, std::numeric_limits<double>::infinity()};
    r.suppressed = false;
    auto b = record("emd", "original", UrlMode::benign, false, "", "acme");
    b.expected_brand.reset();
    b.suppressed = true;
    write_records({r, b}, dir / "r.tsv");
    const auto back = read_records(dir / "r.tsv");
    REQUIRE(back.size() == 2);
    CHECK(format_record(back[0]) == format_record(r));
    CHECK(format_record(back[1]) == format_record(b));
    CHECK(back[0].quality->ssim == r.quality->ssim);
    CHECK(std::isinf(back[0].quality->psnr));
    CHECK(back[1].suppressed);
    CHECK_THROWS_AS(parse_record("a\tb", 3), ParseError);
}

TEST_CASE("report groups every configured manipulation into its own row") {
    std::vector<EvalRecord> recs;
    std::vector<std::string> rows = {"original"};
    for (auto k : kAllManipulationKinds) rows.emplace_back(to_string(k));
    for (const char* a : {"FGSM", "PGD", "CW"}) rows.emplace_back(a);
    for (const auto& m : rows)
        for (auto mode : {UrlMode::benign, UrlMode::squatted})
            recs.push_back(record("emd", m, mode, mode == UrlMode::squatted, "acme", "acme"));
    const auto groups = summarize(recs);
    CHECK(groups.size() == rows.size() * 2);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(groups[2 * i].key.manipulation == rows[i]);
    CHECK(manipulation_rank("original") == 0);
    CHECK(manipulation_rank("Elimination") < manipulation_rank("CaseConversion"));
    CHECK(manipulation_rank("CaseConversion") < manipulation_rank("FGSM"));

    const auto csv = summary_csv(groups);
    CHECK(csv.find("emd,original,squatted,1,1,1,0,0,0,1.0000,1.0000,1.0000,null,null,null,0.500000\n") !=
          std::string::npos);
    const auto grid = text_grid(groups);
    CHECK(grid.find("1/1 (100.00%)") != std::string::npos);
    CHECK(grid.find("0/1 (0.00%)") != std::string::npos);
    CHECK(grid.find("0/0 (—)") != std::string::npos);
    CHECK(detection_svg(groups).find("<svg") != std::string::npos);

    TempDir dir;
    report(recs, dir.path());
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "grid.txt"));
    CHECK(fs::exists(dir / "detection.svg"));
    CHECK_THROWS_AS(report({}, dir.path()), ValidationError);
}

TEST_CASE("evaluating 110 originals under benign and squatted urls") {
    TempDir dir;
    SynthOptions o;
    o.brands = 110;
    o.seed = 3;
    const auto paths = write_synthetic_corpus(o, dir.path());
    const auto manifest = load_manifest(paths.manifest);
    const auto refs = load_reference_list(paths.refs, ReferenceVariant::base);
    const auto emd = default_detector_config().at("emd");

    EvalOptions opts;
    const auto benign = evaluate({emd}, manifest.entries, refs, UrlMode::benign, opts);
    REQUIRE(benign.records.size() == 110);
    CHECK(benign.errors.empty());
    RateCounts cb;
    for (const auto& r : benign.records) accumulate(cb, r);
    CHECK(cb.n_b == 110);
    CHECK(cb.n_p == 0);

    opts.squat_urls = build_squat_map(manifest.entries);
    CHECK(opts.squat_urls.size() == 110);
    opts.workers = 2;
    const auto squatted = evaluate({emd}, manifest.entries, refs, UrlMode::squatted, opts);
    RateCounts cs;
    for (const auto& r : squatted.records) {
        accumulate(cs, r);
        CHECK(r.url != manifest.find(r.sample_id)->url);
    }
    CHECK(cs.n_p == 110);
    CHECK(cb.n_fp <= cs.n_tp);
    CHECK(evaluate({emd}, {}, refs, UrlMode::benign).records.empty());
    CHECK_THROWS(evaluate({emd}, manifest.entries, refs, UrlMode::squatted));
}
