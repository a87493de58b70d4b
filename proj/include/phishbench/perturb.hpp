#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phishbench/core.hpp"
#include "phishbench/random.hpp"

namespace phishbench {

/// Similarity model attacked by the white-box attacks. Pixels are in [0, 1].
class DifferentiableScorer {
public:
    virtual ~DifferentiableScorer() = default;
    virtual double score(const FloatImage& logo, const FloatImage& reference) const = 0;
    /// d score / d logo, same shape as `logo`.
    virtual FloatImage gradient(const FloatImage& logo, const FloatImage& reference) const = 0;
};

/// Cosine similarity between 32x32 area-downsampled luma vectors.
class CosineScorer final : public DifferentiableScorer {
public:
    static constexpr int kSide = 32;

    double score(const FloatImage& logo, const FloatImage& reference) const override;
    FloatImage gradient(const FloatImage& logo, const FloatImage& reference) const override;

    /// The 1024-vector the scorer compares; exposed for testing.
    static std::vector<double> embed(const FloatImage& img);
};

/// score = <w, x>; the reference is ignored.
class LinearScorer final : public DifferentiableScorer {
public:
    explicit LinearScorer(FloatImage weights) : w_(std::move(weights)) {}
    double score(const FloatImage& logo, const FloatImage& reference) const override;
    FloatImage gradient(const FloatImage& logo, const FloatImage& reference) const override;

private:
    FloatImage w_;
};

std::unique_ptr<DifferentiableScorer> builtin_scorer();

enum class AttackKind { FGSM, PGD, CW };
std::string_view to_string(AttackKind a);
AttackKind parse_attack_kind(std::string_view text);

struct PerturbationConfig {
    AttackKind attack = AttackKind::FGSM;
    double epsilon = 8.0 / 255.0;
    int steps = 40;
    std::optional<double> step_size;  // epsilon / 10 when unset
    double cw_c = 1.0;
    double cw_kappa = 0.0;
    bool random_start = true;

    double effective_step() const { return step_size.value_or(epsilon / 10.0); }
    void validate() const;
    /// Parses `attack=...;epsilon=...;steps=...;step_size=...;c=...;kappa=...;random_start=...`.
    static PerturbationConfig parse(std::string_view params);
    std::string to_string() const;
};

struct AttackResult {
    FloatImage logo;
    double initial_score = 0;
    double final_score = 0;
    int iterations = 0;
    double linf = 0;  // max |x' - x|
    double l2 = 0;    // ||x' - x||_2
    /// CW only: best loss after each step (index 0 = initial iterate).
    std::vector<double> best_loss;
};

/// Called after every iterate with (step index starting at 1, iterate).
using IterateObserver = std::function<void(int, const FloatImage&)>;

AttackResult fgsm(const FloatImage& logo, const FloatImage& reference, const DifferentiableScorer& scorer,
                  const PerturbationConfig& cfg);
AttackResult pgd(const FloatImage& logo, const FloatImage& reference, const DifferentiableScorer& scorer,
                 const PerturbationConfig& cfg, SeedStream& rng, const IterateObserver& observe = {});
AttackResult cw(const FloatImage& logo, const FloatImage& reference, const DifferentiableScorer& scorer,
                const PerturbationConfig& cfg, const IterateObserver& observe = {});

/// Dispatches on cfg.attack.
AttackResult run_attack(const FloatImage& logo, const FloatImage& reference, const DifferentiableScorer& scorer,
                        const PerturbationConfig& cfg, SeedStream& rng);

/// Pastes `perturbed` over the sample's logo region; every other pixel is
/// left untouched. Throws RegionError on a missing region or size mismatch.
ScreenshotSample composite_perturbed_logo(const ScreenshotSample& sample, const RgbImage& perturbed);

struct PerturbedSample {
    ScreenshotSample sample;
    AttackResult attack;
    std::string reference;  // brand/logo file attacked
};

/// Crops the sample's logo, attacks it against the best-scoring reference
/// logo of the sample's brand and composites the result back.
PerturbedSample perturb_sample(const ScreenshotSample& sample, const ReferenceList& refs,
                               const DifferentiableScorer& scorer, const PerturbationConfig& cfg, SeedStream& rng);

}  // namespace phishbench
