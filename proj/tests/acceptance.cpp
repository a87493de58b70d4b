// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "phishbench/cluster.hpp"
#include "phishbench/detect.hpp"
#include "phishbench/manip.hpp"
#include "phishbench/metrics.hpp"
#include "phishbench/perturb.hpp"
#include "phishbench/synth.hpp"
#include "phishbench/urltools.hpp"
#include "support.hpp"

using namespace phishbench;
using namespace testsupport;

namespace {

// Collects failed expectations for one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok && failures_.size() < 8) failures_.push_back(what);
        failed_ |= !ok;
    }
    bool failed() const { return failed_; }
    std::string summary() const {
        std::string s;
        for (const auto& f : failures_) s += "\n    " + f;
        return s;
    }

private:
    bool failed_ = false;
    std::vector<std::string> failures_;
};

using Clock = std::chrono::steady_clock;

bool criterion(int n, const std::string& name, double budget_s, const std::function<void(Check&)>& body) {
    Check c;
    const auto t0 = Clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    c.expect(secs < budget_s, "runtime " + std::to_string(secs) + " s exceeds " + std::to_string(budget_s) + " s");
    char t[32];
    std::snprintf(t, sizeof t, "%.2f", secs);
    std::cout << (c.failed() ? "FAIL" : "PASS") << " criterion " << n << ": " << name << " (" << t << " s)"
              << c.summary() << std::endl;
    return !c.failed();
}

Signature random_signature(SeedStream& rng, std::size_t k) {
    Signature s;
    double total = 0;
    for (std::size_t i = 0; i < k; ++i) {
        SignatureBin b;
        for (auto& f : b.feature) f = rng.uniform();
        b.weight = rng.uniform(0.05, 1.0);
        total += b.weight;
        s.bins.push_back(b);
    }
    for (auto& b : s.bins) b.weight /= total;
    return s;
}

double flow_scan_emd(const Signature& a, const Signature& b) {
    const double p = a.bins[0].weight, q = b.bins[0].weight;
    const double lo = std::max(0.0, p + q - 1), hi = std::min(p, q);
    double d[2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) d[i][j] = ground_distance(a.bins[i], b.bins[j]);
    auto cost = [&](double t) { return t * d[0][0] + (p - t) * d[0][1] + (q - t) * d[1][0] + (1 - p - q + t) * d[1][1]; };
    double best = std::min(cost(lo), cost(hi));
    for (double t = lo; t <= hi; t += 1e-4) best = std::min(best, cost(t));
    return best;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool within_pp(const Ratio& r, double expected_pct) {
    return r.defined() && std::abs(*r.value() * 100 - expected_pct) <= 0.01;
}

// ---------------------------------------------------------------------------

void metric_arithmetic(Check& c) {
    // Known-answer counts: detection over two corpus sizes with the base and
    // extended lists, then identification counts.
    struct Cell {
        std::uint64_t num, den;
        double pct;
    };
    const Cell detection[] = {{204880, 312355, 65.59}, {206846, 312355, 66.22}, {235838, 451514, 52.23},
                              {237861, 451514, 52.68}};
    for (const auto& d : detection) {
        RateCounts k;
        k.n_p = d.den;
        k.n_tp = d.num;
        c.expect(within_pp(compute_rates(k).tpr, d.pct), "tpr " + std::to_string(d.num));
    }
    const Cell ident[][2] = {{{200134, 312355, 64.07}, {200134, 204880, 97.68}},
                             {{202123, 312355, 64.71}, {202123, 206846, 97.72}}};
    for (const auto& row : ident) {
        RateCounts k;
        k.n_p = row[0].den;
        k.n_tp = row[1].den;
        k.i_tp = row[0].num;
        const auto r = compute_rates(k);
        c.expect(within_pp(r.ident_rate, row[0].pct), "ident_rate " + std::to_string(row[0].num));
        c.expect(within_pp(r.ident_precision, row[1].pct), "ident_precision " + std::to_string(row[1].num));
    }
    RateCounts zoo;
    zoo.n_b = 2500;
    zoo.n_fp = 2348;
    const auto fpr = compute_rates(zoo).fpr;
    c.expect(within_pp(fpr, 93.92), "fpr 2,348/2,500");
    c.expect(fpr.cell() == "2,348/2,500 (93.92%)", "cell " + fpr.cell());
}

void emd_correctness(Check& c) {
    SeedStream rng(2024, "acceptance", "emd");
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_signature(rng, 1 + rng.uniform_index(5));
        const auto b = random_signature(rng, 1 + rng.uniform_index(5));
        const auto x = random_signature(rng, 1 + rng.uniform_index(5));
        const double ab = emd_distance(a, b), ba = emd_distance(b, a), bx = emd_distance(b, x), ax = emd_distance(a, x);
        c.expect(ab >= 0 && ba >= 0 && ax >= 0, "non-negativity");
        c.expect(std::abs(ab - ba) <= 1e-9, "symmetry");
        c.expect(emd_distance(a, a) <= 1e-12, "identity");
        c.expect(ax <= ab + bx + 1e-9, "triangle inequality");
    }
    for (int i = 0; i < 200; ++i) {
        const auto a = random_signature(rng, 2), b = random_signature(rng, 2);
        c.expect(std::abs(emd_distance(a, b) - flow_scan_emd(a, b)) <= 1e-6, "2x2 oracle pair " + std::to_string(i));
    }
}

bool covered(const std::vector<Rect>& rects, int x, int y) {
    for (const auto& r : rects)
        if (r.contains(x, y)) return true;
    return false;
}

void manipulation_invariants(Check& c) {
    TempDir dir;
    SynthOptions o;
    o.brands = 20;
    o.seed = 31;
    const auto paths = write_synthetic_corpus(o, dir.path());
    const auto manifest = load_manifest(paths.manifest);
    const auto refs = load_reference_list(paths.refs, ReferenceVariant::base);
    const auto plan = read_plan(paths.plan);
    c.expect(manifest.entries.size() == 20, "corpus size");

    std::set<std::string> kinds_seen;
    for (const auto& line : plan) {
        const auto* s = manifest.find(line.sample_id);
        const auto spec = ManipulationSpec::parse(line.kind, line.params);
        const std::string vid = s->id + "@" + line.kind;
        SeedStream r1(o.seed, "manip", vid), r2(o.seed, "manip", vid);
        const auto a = apply_manipulation(*s, spec, refs, r1);
        const auto b = apply_manipulation(*s, spec, refs, r2);
        kinds_seen.insert(line.kind);
        c.expect(a.sample.image == b.sample.image && a.sample.logo_region == b.sample.logo_region,
                 vid + " not reproducible");
        c.expect(a.sample.image.width() == s->image.width() && a.sample.image.height() == s->image.height(),
                 vid + " changed dimensions");
        for (int y = 0; y < s->image.height(); ++y)
            for (int x = 0; x < s->image.width(); ++x)
                if (a.sample.image.pixel(x, y) != s->image.pixel(x, y) && !covered(a.affected, x, y)) {
                    c.expect(false, vid + " changed a pixel outside its declared regions");
                    y = s->image.height();
                    break;
                }

        const Rect region = s->logo_region->rect();
        switch (spec.kind) {
            case ManipulationKind::Elimination: {
                const Rgb bg = sample_background_color(s->image, region).color;
                bool flat = true;
                for (int y = region.y; y < region.y + region.h; ++y)
                    for (int x = region.x; x < region.x + region.w; ++x) flat &= a.sample.image.pixel(x, y) == bg;
                c.expect(flat, vid + " region not flat");
                break;
            }
            case ManipulationKind::Flipping: {
                ScreenshotSample once = a.sample;
                once.id = s->id;
                SeedStream r3(o.seed, "manip", vid);
                c.expect(apply_manipulation(once, spec, refs, r3).sample.image == s->image, vid + " flip twice");
                break;
            }
            case ManipulationKind::Rotation: {
                SeedStream r3(o.seed, "manip", vid);
                const auto zero = ManipulationSpec::parse("Rotation", "angle=0;interp=nearest");
                c.expect(apply_manipulation(*s, zero, refs, r3).sample.image == s->image, vid + " rotation 0");
                break;
            }
            case ManipulationKind::Blurring:
                c.expect(total_variation(a.sample.image) <= total_variation(s->image), vid + " blur raised TV");
                break;
            default:
                break;
        }
    }
    c.expect(kinds_seen.size() == 13, "plan covers " + std::to_string(kinds_seen.size()) + " kinds");
}

void perturbation_contracts(Check& c) {
    SeedStream rng(2024, "acceptance", "perturb");
    CosineScorer scorer;
    for (int i = 0; i < 100; ++i) {
        const int w = 24 + static_cast<int>(rng.uniform_index(40)), h = 16 + static_cast<int>(rng.uniform_index(24));
        const RgbImage logo8 = blocks(w, h, 2 + static_cast<int>(rng.uniform_index(4)), rng);
        const RgbImage ref8 = blocks(w, h, 3, rng);
        const auto logo = to_float(logo8), ref = to_float(ref8);
        for (auto kind : {AttackKind::FGSM, AttackKind::PGD}) {
            const auto cfg = PerturbationConfig::parse("attack=" + std::string(to_string(kind)) + ";epsilon=8/255");
            SeedStream arng(7, "perturb", std::to_string(i));
            const RgbImage out = to_rgb8(run_attack(logo, ref, scorer, cfg, arng).logo);
            int worst = 0;
            for (std::size_t k = 0; k < out.bytes().size(); ++k)
                worst = std::max(worst, std::abs(int(out.bytes()[k]) - int(logo8.bytes()[k])));
            c.expect(worst <= 8, std::string(to_string(kind)) + " left the eps ball on logo " + std::to_string(i));
        }
    }

    // Fourth-order central differences keep the oracle accurate for the
    // near-zero components a relative tolerance is sensitive to.
    const double fd_h = 1e-3;
    for (int i = 0; i < 20; ++i) {
        FloatImage x(20 + static_cast<int>(rng.uniform_index(50)), 20 + static_cast<int>(rng.uniform_index(30)), 3);
        FloatImage ref(32, 32, 3);
        for (auto& v : x.data) v = rng.uniform();
        for (auto& v : ref.data) v = rng.uniform();
        const auto g = scorer.gradient(x, ref);
        for (int k = 0; k < 20; ++k) {
            const std::size_t p = rng.uniform_index(x.size());
            auto at = [&](double step) {
                FloatImage moved = x;
                moved.data[p] += step;
                return scorer.score(moved, ref);
            };
            const double fd = (at(-2 * fd_h) - 8 * at(-fd_h) + 8 * at(fd_h) - at(2 * fd_h)) / (12 * fd_h);
            const double rel = std::abs(fd - g.data[p]) / std::max({std::abs(fd), std::abs(g.data[p]), 1e-12});
            char msg[160];
            std::snprintf(msg, sizeof msg, "gradient mismatch: fd %.6g, analytic %.6g", fd, g.data[p]);
            c.expect(rel < 1e-4, msg);
        }
    }

    FloatImage wts(16, 16, 3), x(16, 16, 3);
    for (auto& v : wts.data) v = rng.uniform() < 0.5 ? -rng.uniform(0.1, 1) : rng.uniform(0.1, 1);
    for (auto& v : x.data) v = rng.uniform(0.1, 0.9);
    LinearScorer linear(wts);
    const auto fg = PerturbationConfig::parse("attack=FGSM");
    const auto lf = fgsm(x, x, linear, fg);
    bool exact = true;
    for (std::size_t i = 0; i < x.size(); ++i) exact &= lf.logo.data[i] == x.data[i] - fg.epsilon * (wts.data[i] > 0 ? 1 : -1);
    c.expect(exact, "linear FGSM is not -eps*sign(w)");

    for (int i = 0; i < 10; ++i) {
        FloatImage a(24, 24, 3), r(24, 24, 3);
        for (auto& v : a.data) v = rng.uniform();
        for (auto& v : r.data) v = rng.uniform();
        auto pc = PerturbationConfig::parse("attack=PGD;steps=1;random_start=false");
        pc.step_size = pc.epsilon;
        SeedStream arng(1);
        c.expect(pgd(a, r, scorer, pc, arng).logo.data == fgsm(a, r, scorer, fg).logo.data, "PGD(1) != FGSM");
    }
}

void detector_behaviour(Check& c) {
    RgbImage shot(100, 100, {0, 0, 0});
    fill(shot, {50, 0, 50, 100}, {255, 255, 255});
    SeedStream rng(2024, "acceptance", "detect");
    const RgbImage logo = blocks(120, 60, 6, rng);
    ReferenceList refs;
    refs.brands["acme"] = BrandReference{"acme", {{"logo.png", to_rgba(logo)}}, {{"home.png", shot}}, {"acme.com"}};
    refs.brands["barclays"] = BrandReference{"barclays", {{"logo.png", to_rgba(blocks(120, 60, 6, rng))}}, {}, {"barclays.co.uk"}};
    refs.brands["facebook"] = BrandReference{"facebook", {{"logo.png", to_rgba(blocks(120, 60, 6, rng))}}, {}, {"facebook.com"}};

    ScreenshotSample dup;
    dup.id = "dup";
    dup.image = shot;
    const auto v = emd_detect(dup, refs, 0.94);
    c.expect(v.is_phishing() && v.brand == "acme" && v.score == 1.0, "exact duplicate not flagged at s = 1.0");

    // Find a near-duplicate scoring in [0.90, 0.94).
    ScreenshotSample near = dup;
    double s = 1.0;
    for (int col = 50; col < 100 && s >= 0.94; ++col) {
        fill(near.image, {col, 0, 1, 100}, {0, 0, 0});
        s = emd_detect(near, refs, 0.94).score;
    }
    c.expect(s >= 0.90 && s < 0.94, "no near-threshold sample, score " + std::to_string(s));
    c.expect(emd_detect(near, refs, 0.94).label == Label::benign, "near-threshold sample flagged");

    const auto df = DocumentFrequency::from_reference_list(refs);
    TempDir dir;
    ScreenshotSample pasted;
    pasted.id = "pasted";
    pasted.image = RgbImage(400, 300, {240, 240, 240});
    paste(pasted.image, logo, 30, 20);
    pasted.url = "https://acme-account.example/login";
    write_text(dir / "p.html", "<title>Acme</title><h1>Acme sign in</h1>");
    pasted.html_path = dir / "p.html";
    const auto pv = profile_detect(pasted, refs, 40, df);
    c.expect(pv.is_phishing() && pv.brand == "acme" && pv.score >= 40,
             "pasted logo not flagged, score " + std::to_string(pv.score));
    ScreenshotSample blank;
    blank.id = "blank";
    blank.image = RgbImage(400, 300, {255, 255, 255});
    c.expect(profile_detect(blank, refs, 40, df).label == Label::benign, "blank sample flagged");

    DomainCheckOptions scan;
    scan.brand_token_scan = true;
    c.expect(verify_brand_domain("facebook", "https://www.facebook.com/login", refs), "facebook.com inconsistent");
    c.expect(!verify_brand_domain("facebook", "https://faceb00k.com", refs), "faceb00k.com consistent");
    c.expect(!verify_brand_domain("barclays", "https://home.barclays/", refs), "home.barclays naive consistent");
    c.expect(verify_brand_domain("barclays", "https://home.barclays/", refs, SuffixTable::builtin(), scan),
             "home.barclays with scan inconsistent");
}

void typosquats(Check& c) {
    c.expect(generate_typosquats("facebook.com").contains("faceb00k.com"), "faceb00k.com missing");
    TyposquatOptions o;
    o.ops = static_cast<TypoOps>(TypoOp::transposition);
    SeedStream rng(2024, "acceptance", "squat");
    for (int i = 0; i < 50; ++i) {
        std::string letters = "abcdefghijklmnopqrstuvwxyz0123456789";
        for (std::size_t k = letters.size() - 1; k > 0; --k) std::swap(letters[k], letters[rng.uniform_index(k + 1)]);
        std::string sld = letters.substr(0, 2 + rng.uniform_index(14));
        const auto n = generate_typosquats(sld + ".com", o).size();
        c.expect(n == sld.size() - 1, sld + ": " + std::to_string(n) + " transpositions");
    }
}

void end_to_end(Check& c) {
    TempDir dir;
    SynthOptions o;
    o.brands = 110;
    o.seed = 2024;
    const auto paths = write_synthetic_corpus(o, dir.path());
    const auto manifest = load_manifest(paths.manifest);
    const auto refs = load_reference_list(paths.refs, ReferenceVariant::base);

    std::vector<ScreenshotSample> samples = manifest.entries;
    for (const auto& line : read_plan(paths.plan)) {
        const auto* s = manifest.find(line.sample_id);
        SeedStream rng(o.seed, "manip", s->id + "@" + line.kind);
        samples.push_back(apply_manipulation(*s, ManipulationSpec::parse(line.kind, line.params), refs, rng).sample);
    }
    c.expect(samples.size() == 110 * 14, "sample count " + std::to_string(samples.size()));

    const auto& cfg = default_detector_config();
    const std::vector<DetectorEntry> detectors = {cfg.at("emd"), cfg.at("phishzoo")};
    EvalOptions opts;
    opts.squat_urls = build_squat_map(manifest.entries);
    std::vector<EvalRecord> records;
    for (auto mode : {UrlMode::benign, UrlMode::squatted}) {
        auto r = evaluate(detectors, samples, refs, mode, opts);
        c.expect(r.errors.empty(), std::to_string(r.errors.size()) + " evaluation errors");
        records.insert(records.end(), r.records.begin(), r.records.end());
    }
    c.expect(records.size() == 110 * 14 * 2 * 2, "record count " + std::to_string(records.size()));

    const auto groups = summarize(records);
    c.expect(groups.size() == 14 * 2 * 2, "group count " + std::to_string(groups.size()));
    std::map<std::tuple<std::string, std::string, UrlMode>, RateCounts> by;
    for (const auto& g : groups) by[{g.key.detector, g.key.manipulation, g.key.url_mode}] = g.counts;
    for (const auto& g : groups) {
        if (g.key.url_mode != UrlMode::benign) continue;
        const auto& benign = g.counts;
        const auto& squat = by[{g.key.detector, g.key.manipulation, UrlMode::squatted}];
        c.expect(benign.n_b == 110 && squat.n_p == 110, g.key.detector + "/" + g.key.manipulation + " row size");
        c.expect(benign.n_fp <= squat.n_tp, g.key.detector + "/" + g.key.manipulation + ": benign detections " +
                                                std::to_string(benign.n_fp) + " > squatted " +
                                                std::to_string(squat.n_tp));
    }
    const auto orig = by[{"phishzoo", "original", UrlMode::squatted}];
    const auto elim = by[{"phishzoo", "Elimination", UrlMode::squatted}];
    c.expect(elim.i_tp < orig.i_tp, "Elimination identification " + std::to_string(elim.i_tp) + " not below original " +
                                        std::to_string(orig.i_tp));

    const std::string grid = text_grid(groups);
    std::istringstream lines(grid);
    std::string first, header;
    std::getline(lines, first);
    std::getline(lines, header);
    for (const char* col : {"emd (benign)", "emd (squatted)", "phishzoo (benign)", "phishzoo (squatted)"})
        c.expect(header.find(col) != std::string::npos, std::string("grid lacks column ") + col);
    c.expect(grid.find("/110 (") != std::string::npos, "grid cells are not k/110");
    std::cout << grid;
}

void adapter_robustness(Check& c) {
    SeedStream rng(2024, "acceptance", "adapter");
    ReferenceList refs;
    refs.brands["acme"] = BrandReference{"acme", {{"logo.png", to_rgba(noise(8, 8, rng))}}, {}, {"acme.com"}};
    std::vector<ScreenshotSample> samples;
    for (int i = 0; i < 1000; ++i) {
        ScreenshotSample s;
        s.id = "req" + std::to_string(i);
        s.image = noise(8, 8, rng);
        s.url = "https://host" + std::to_string(rng.next_u64()) + ".example/p" + std::to_string(i);
        samples.push_back(std::move(s));
    }
    DetectorEntry e;
    e.id = "echo";
    e.kind = DetectorKind::external;
    e.threshold = 0.5;
    e.domain_check = false;
    e.timeout_seconds = 10;
    e.adapter_cmd = std::string("'") + PHISHBENCH_ECHO_ADAPTER + "' --echo";

    const auto ok = evaluate({e}, samples, refs, UrlMode::benign);
    c.expect(ok.records.size() == 1000 && ok.errors.empty(), "echo run lost requests");
    std::size_t exact = 0;
    for (const auto& r : ok.records) {
        const auto* s = &samples[std::stoul(r.sample_id.substr(3))];
        exact += r.verdict.score == static_cast<double>(fnv1a(s->url) % 1000003) && r.verdict.label == Label::benign;
    }
    c.expect(exact == 1000, std::to_string(exact) + "/1000 responses round-tripped");

    e.adapter_cmd += " --crash-every 7";
    const auto crashy = evaluate({e}, samples, refs, UrlMode::benign);
    c.expect(!crashy.errors.empty(), "crashing adapter produced no errors");
    c.expect(crashy.records.size() + crashy.errors.size() == 1000,
             "records + errors = " + std::to_string(crashy.records.size() + crashy.errors.size()));
    c.expect(crashy.errors.size() < 500, "failure rate above threshold");

    e.adapter_cmd = std::string("'") + PHISHBENCH_ECHO_ADAPTER + "' --crash-every 1";
    bool aborted = false;
    try {
        evaluate({e}, samples, refs, UrlMode::benign);
    } catch (const AdapterError&) {
        aborted = true;
    }
    c.expect(aborted, "always-crashing adapter did not abort the run");
}

}  // namespace

int main() {
    bool ok = true;
    ok &= criterion(1, "metric arithmetic", 1, metric_arithmetic);
    ok &= criterion(2, "EMD correctness", 30, emd_correctness);
    ok &= criterion(3, "manipulation invariants", 60, manipulation_invariants);
    ok &= criterion(4, "perturbation contracts", 120, perturbation_contracts);
    ok &= criterion(5, "detector behaviour", 60, detector_behaviour);
    ok &= criterion(6, "typosquats", 10, typosquats);
    ok &= criterion(7, "end-to-end protocol", 600, end_to_end);
    ok &= criterion(8, "adapter robustness", 300, adapter_robustness);
    return ok ? 0 : 1;
}
