#include "phishbench/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phishbench/text.hpp"

namespace phishbench {
namespace {

constexpr double kGray[3] = {0.299, 0.587, 0.114};

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

std::vector<double> gray_plane(const FloatImage& img) {
    std::vector<double> g(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double acc = 0;
        for (int c = 0; c < img.channels; ++c)
            acc += (img.channels == 3 ? kGray[c] : 1.0 / img.channels) * img.data[i * img.channels + c];
        g[i] = acc;
    }
    return g;
}

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

void finish(AttackResult& r, const FloatImage& x0, const FloatImage& reference, const DifferentiableScorer& scorer) {
    double linf = 0, l2 = 0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        const double d = r.logo.data[i] - x0.data[i];
        linf = std::max(linf, std::abs(d));
        l2 += d * d;
    }
    r.linf = linf;
    r.l2 = std::sqrt(l2);
    r.final_score = scorer.score(r.logo, reference);
}

void check_shape(const FloatImage& logo, const FloatImage& g) {
    if (!logo.same_shape(g)) throw ShapeError("scorer gradient shape does not match the logo");
}

}  // namespace

std::vector<double> CosineScorer::embed(const FloatImage& img) {
    if (img.width < 1 || img.height < 1) throw ShapeError("empty image");
    return area_resample(gray_plane(img), img.width, img.height, kSide, kSide);
}

double CosineScorer::score(const FloatImage& logo, const FloatImage& reference) const {
    const auto u = embed(logo);
    const auto v = embed(reference);
    const double nu = norm(u), nv = norm(v);
    if (nu == 0 || nv == 0) throw DegenerateInputError("cosine similarity of an all-black image is undefined");
    return std::inner_product(u.begin(), u.end(), v.begin(), 0.0) / (nu * nv);
}

FloatImage CosineScorer::gradient(const FloatImage& logo, const FloatImage& reference) const {
    const auto u = embed(logo);
    const auto v = embed(reference);
    const double nu = norm(u), nv = norm(v);
    if (nu == 0 || nv == 0) throw DegenerateInputError("cosine similarity of an all-black image is undefined");
    const double dot = std::inner_product(u.begin(), u.end(), v.begin(), 0.0);
    // d cos / du = v / (|u||v|) - (u.v) u / (|u|^3 |v|)
    std::vector<double> gu(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) gu[i] = v[i] / (nu * nv) - dot * u[i] / (nu * nu * nu * nv);

    // Back through the separable area map u = Wy * G * Wx^T.
    const auto wx = area_weights(logo.width, kSide);
    const auto wy = area_weights(logo.height, kSide);
    std::vector<double> tmp(static_cast<std::size_t>(kSide) * logo.width, 0.0);  // Gu * Wx, kSide x width
    for (int j = 0; j < kSide; ++j)
        for (int i = 0; i < kSide; ++i) {
            const double g = gu[static_cast<std::size_t>(j) * kSide + i];
            for (int x = 0; x < logo.width; ++x)
                if (wx[i][x] != 0) tmp[static_cast<std::size_t>(j) * logo.width + x] += g * wx[i][x];
        }
    FloatImage out(logo.width, logo.height, logo.channels, 0.0);
    for (int y = 0; y < logo.height; ++y)
        for (int j = 0; j < kSide; ++j) {
            const double wgt = wy[j][y];
            if (wgt == 0) continue;
            for (int x = 0; x < logo.width; ++x) {
                const double g = wgt * tmp[static_cast<std::size_t>(j) * logo.width + x];
                for (int c = 0; c < logo.channels; ++c)
                    out(x, y, c) += g * (logo.channels == 3 ? kGray[c] : 1.0 / logo.channels);
            }
        }
    return out;
}

double LinearScorer::score(const FloatImage& logo, const FloatImage&) const {
    if (!logo.same_shape(w_)) throw ShapeError("linear scorer weight shape mismatch");
    return std::inner_product(logo.data.begin(), logo.data.end(), w_.data.begin(), 0.0);
}

FloatImage LinearScorer::gradient(const FloatImage& logo, const FloatImage&) const {
    if (!logo.same_shape(w_)) throw ShapeError("linear scorer weight shape mismatch");
    return w_;
}

std::unique_ptr<DifferentiableScorer> builtin_scorer() { return std::make_unique<CosineScorer>(); }

std::string_view to_string(AttackKind a) {
    switch (a) {
        case AttackKind::FGSM: return "FGSM";
        case AttackKind::PGD: return "PGD";
        case AttackKind::CW: return "CW";
    }
    return "?";
}

AttackKind parse_attack_kind(std::string_view text) {
    const std::string t = to_lower(trim(text));
    if (t == "fgsm") return AttackKind::FGSM;
    if (t == "pgd") return AttackKind::PGD;
    if (t == "cw") return AttackKind::CW;
    throw ValidationError("unknown attack '" + std::string(text) + "'");
}

void PerturbationConfig::validate() const {
    if (!(epsilon > 0)) throw ValidationError("epsilon must be > 0");
    if (steps < 1) throw ValidationError("steps must be >= 1");
    if (!(effective_step() > 0)) throw ValidationError("step_size must be > 0");
    if (!(cw_c >= 0)) throw ValidationError("c must be >= 0");
}

PerturbationConfig PerturbationConfig::parse(std::string_view params) {
    PerturbationConfig cfg;
    for (const auto& item : split(params, ';')) {
        const auto kv = trim(item);
        if (kv.empty()) continue;
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) throw ValidationError("parameter '" + std::string(kv) + "' lacks '='");
        const std::string key(trim(kv.substr(0, eq)));
        const std::string_view value = trim(kv.substr(eq + 1));
        if (key == "attack") cfg.attack = parse_attack_kind(value);
        else if (key == "epsilon" || key == "eps") {
            // Accept "8/255" as well as decimals.
            if (const auto slash = value.find('/'); slash != std::string_view::npos)
                cfg.epsilon = parse_real(value.substr(0, slash)) / parse_real(value.substr(slash + 1));
            else
                cfg.epsilon = parse_real(value);
        } else if (key == "steps") cfg.steps = static_cast<int>(parse_real(value));
        else if (key == "step_size") cfg.step_size = parse_real(value);
        else if (key == "c") cfg.cw_c = parse_real(value);
        else if (key == "kappa") cfg.cw_kappa = parse_real(value);
        else if (key == "random_start") {
            if (value != "true" && value != "false" && value != "1" && value != "0")
                throw ValidationError("random_start must be true or false");
            cfg.random_start = value == "true" || value == "1";
        }
        else throw ValidationError("unknown perturbation parameter '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

std::string PerturbationConfig::to_string() const {
    std::string s = "attack=" + std::string(phishbench::to_string(attack)) + ";epsilon=" + format_real(epsilon);
    if (attack != AttackKind::FGSM) {
        s += ";steps=" + std::to_string(steps) + ";step_size=" + format_real(effective_step());
    }
    if (attack == AttackKind::PGD) s += std::string(";random_start=") + (random_start ? "true" : "false");
    if (attack == AttackKind::CW) s += ";c=" + format_real(cw_c) + ";kappa=" + format_real(cw_kappa);
    return s;
}

AttackResult fgsm(const FloatImage& logo, const FloatImage& reference, const DifferentiableScorer& scorer,
                  const PerturbationConfig& cfg) {
    const FloatImage g = scorer.gradient(logo, reference);
    check_shape(logo, g);
    AttackResult r;
    r.initial_score = scorer.score(logo, reference);
    r.logo = logo;
    for (std::size_t i = 0; i < logo.size(); ++i)
        r.logo.data[i] = std::clamp(logo.data[i] - cfg.epsilon * sign(g.data[i]), 0.0, 1.0);
    r.iterations = 1;
    finish(r, logo, reference, scorer);
    return r;
}

AttackResult pgd(const FloatImage& logo, const FloatImage& reference, const DifferentiableScorer& scorer,
                 const PerturbationConfig& cfg, SeedStream& rng, const IterateObserver& observe) {
    cfg.validate();
    const double eps = cfg.epsilon;
    const double step = cfg.effective_step();
    AttackResult r;
    r.initial_score = scorer.score(logo, reference);
    FloatImage x = logo;
    if (cfg.random_start)
        for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = std::clamp(logo.data[i] + rng.uniform(-eps, eps), 0.0, 1.0);
    for (int t = 1; t <= cfg.steps; ++t) {
        const FloatImage g = scorer.gradient(x, reference);
        check_shape(logo, g);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = x.data[i] - step * sign(g.data[i]);
            x.data[i] = std::clamp(std::clamp(v, logo.data[i] - eps, logo.data[i] + eps), 0.0, 1.0);
        }
        if (observe) observe(t, x);
    }
    r.logo = std::move(x);
    r.iterations = cfg.steps;
    finish(r, logo, reference, scorer);
    return r;
}

AttackResult cw(const FloatImage& logo, const FloatImage& reference, const DifferentiableScorer& scorer,
                const PerturbationConfig& cfg, const IterateObserver& observe) {
    cfg.validate();
    const double lr = cfg.effective_step();
    auto loss_of = [&](const FloatImage& x, double s) {
        double d2 = 0;
        for (std::size_t i = 0; i < x.size(); ++i) d2 += (x.data[i] - logo.data[i]) * (x.data[i] - logo.data[i]);
        return std::max(s - cfg.cw_kappa, 0.0) + cfg.cw_c * d2;
    };

    AttackResult r;
    r.initial_score = scorer.score(logo, reference);
    FloatImage x = logo;
    double score = r.initial_score;
    FloatImage best = x;
    double best_loss = loss_of(x, score);
    r.best_loss.push_back(best_loss);
    for (int t = 1; t <= cfg.steps; ++t) {
        // Sub-gradient convention: the hinge counts as active at score == kappa.
        const bool active = score - cfg.cw_kappa >= 0;
        FloatImage g = active ? scorer.gradient(x, reference) : FloatImage(x.width, x.height, x.channels, 0.0);
        check_shape(logo, g);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double delta = x.data[i] - logo.data[i];
            const double grad = g.data[i] + 2 * cfg.cw_c * delta;
            x.data[i] = std::clamp(x.data[i] - lr * grad, 0.0, 1.0);
        }
        score = scorer.score(x, reference);
        const double loss = loss_of(x, score);
        if (loss < best_loss) {
            best_loss = loss;
            best = x;
        }
        r.best_loss.push_back(best_loss);
        if (observe) observe(t, x);
    }
    r.logo = std::move(best);
    r.iterations = cfg.steps;
    finish(r, logo, reference, scorer);
    return r;
}

AttackResult run_attack(const FloatImage& logo, const FloatImage& reference, const DifferentiableScorer& scorer,
                        const PerturbationConfig& cfg, SeedStream& rng) {
    cfg.validate();
    switch (cfg.attack) {
        case AttackKind::FGSM: return fgsm(logo, reference, scorer, cfg);
        case AttackKind::PGD: return pgd(logo, reference, scorer, cfg, rng);
        case AttackKind::CW: return cw(logo, reference, scorer, cfg);
    }
    throw ValidationError("unknown attack");
}

ScreenshotSample composite_perturbed_logo(const ScreenshotSample& sample, const RgbImage& perturbed) {
    if (!sample.logo_region) throw RegionError("sample '" + sample.id + "' has no logo region");
    const Rect r = sample.logo_region->rect();
    if (perturbed.width() != r.w || perturbed.height() != r.h)
        throw RegionError("perturbed logo is " + std::to_string(perturbed.width()) + "x" +
                          std::to_string(perturbed.height()) + " but the region is " + std::to_string(r.w) + "x" +
                          std::to_string(r.h));
    ScreenshotSample out = sample;
    paste(out.image, perturbed, r.x, r.y);
    return out;
}

PerturbedSample perturb_sample(const ScreenshotSample& sample, const ReferenceList& refs,
                               const DifferentiableScorer& scorer, const PerturbationConfig& cfg, SeedStream& rng) {
    if (!sample.logo_region) throw RegionError("sample '" + sample.id + "' has no logo region");
    if (!sample.brand) throw AssetError("sample '" + sample.id + "' has no brand to attack against");
    const BrandReference* brand = refs.find(*sample.brand);
    if (!brand || brand->logos.empty()) throw AssetError("no reference logo for brand '" + *sample.brand + "'");

    const FloatImage logo = to_float(crop(sample.image, sample.logo_region->rect()));
    // Attack the reference the scorer currently considers the closest match.
    const NamedLogo* best = nullptr;
    FloatImage best_ref;
    double best_score = -2;
    for (const auto& l : brand->logos) {
        FloatImage ref = to_float(flatten(l.image));
        const double s = scorer.score(logo, ref);
        if (s > best_score) {
            best_score = s;
            best = &l;
            best_ref = std::move(ref);
        }
    }
    PerturbedSample out;
    out.attack = run_attack(logo, best_ref, scorer, cfg, rng);
    out.reference = brand->brand + "/" + best->file;
    out.sample = composite_perturbed_logo(sample, to_rgb8(out.attack.logo));
    out.sample.id = sample.id + "@" + std::string(to_string(cfg.attack));
    auto& md = out.sample.metadata;
    md["manipulation"] = std::string(to_string(cfg.attack));
    md["params"] = cfg.to_string();
    md["source_id"] = sample.id;
    md["reference"] = out.reference;
    return out;
}

}  // namespace phishbench
