#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "phishbench/errors.hpp"
#include "phishbench/metrics.hpp"
#include "phishbench/random.hpp"
#include "phishbench/text.hpp"

namespace phishbench {
namespace {

struct Runner {
    DetectorEntry entry;
    std::unique_ptr<EmdDetector> emd;
    std::unique_ptr<ProfileDetector> profile;
    std::vector<std::unique_ptr<ExternalDetector>> external;
    std::vector<std::unique_ptr<std::mutex>> locks;
    std::atomic<std::size_t> failures{0};
};

std::string source_of(const ScreenshotSample& s) {
    const auto it = s.metadata.find("source_id");
    return it == s.metadata.end() ? s.id : it->second;
}

// Authority-free remainder of a URL: path, query and fragment.
std::string url_tail(std::string_view url) {
    std::string_view s = trim(url);
    if (const auto p = s.find("://"); p != std::string_view::npos)
        s = s.substr(p + 3);
    else if (s.starts_with("//"))
        s = s.substr(2);
    const auto cut = s.find_first_of("/?#");
    return cut == std::string_view::npos ? std::string{} : std::string(s.substr(cut));
}

}  // namespace

std::string_view to_string(UrlMode m) { return m == UrlMode::benign ? "benign" : "squatted"; }

UrlMode parse_url_mode(std::string_view text) {
    if (text == "benign") return UrlMode::benign;
    if (text == "squatted") return UrlMode::squatted;
    throw ValidationError("unknown url mode '" + std::string(text) + "'");
}

std::string manipulation_of(const ScreenshotSample& s) {
    const auto it = s.metadata.find("manipulation");
    return it == s.metadata.end() ? "original" : it->second;
}

std::map<std::string, std::string> build_squat_map(const std::vector<ScreenshotSample>& samples,
                                                   const SuffixTable& psl) {
    std::map<std::string, std::string> out;
    for (const auto& s : samples) {
        if (s.metadata.contains("source_id") || s.url.empty()) continue;
        const DomainParts parts = parse_registrable(s.url, psl);
        if (parts.ip_literal) continue;
        TyposquatOptions opts;
        opts.ops = static_cast<TypoOps>(TypoOp::homoglyph);
        auto squats = generate_typosquats(parts.registrable, opts, psl);
        if (squats.empty()) squats = generate_typosquats(parts.registrable, {}, psl);
        if (squats.empty()) continue;
        const std::string prefix = parts.hostname.substr(0, parts.hostname.size() - parts.registrable.size());
        out[s.id] = "https://" + prefix + *squats.begin() + url_tail(s.url);
    }
    return out;
}

void accumulate(RateCounts& c, const EvalRecord& r) {
    const bool hit = r.verdict.is_phishing();
    const bool right_brand = hit && r.expected_brand && r.verdict.brand == r.expected_brand;
    if (r.url_mode == UrlMode::squatted) {
        ++c.n_p;
        c.n_tp += hit;
        c.i_tp += right_brand;
    } else {
        ++c.n_b;
        c.n_fp += hit;
        c.i_fp += hit && !right_brand;
    }
}

EvalResult evaluate(const std::vector<DetectorEntry>& detectors, const std::vector<ScreenshotSample>& samples,
                    const ReferenceList& refs, UrlMode mode, const EvalOptions& options) {
    EvalResult result;
    if (samples.empty() || detectors.empty()) return result;
    const SuffixTable& psl = options.psl ? *options.psl : SuffixTable::builtin();

    // Per-sample inputs shared by every detector.
    std::vector<std::string> urls(samples.size()), html(samples.size());
    std::vector<std::optional<Quality>> quality(samples.size());
    std::map<std::string, const ScreenshotSample*> originals;
    if (options.originals)
        for (const auto& s : *options.originals) originals[s.id] = &s;
    for (const auto& s : samples)
        if (!s.metadata.contains("source_id")) originals[s.id] = &s;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (mode == UrlMode::benign) {
            urls[i] = s.url;
        } else {
            auto it = options.squat_urls.find(s.id);
            if (it == options.squat_urls.end()) it = options.squat_urls.find(source_of(s));
            if (it == options.squat_urls.end()) throw ValidationError("no squatted URL for sample '" + s.id + "'");
            urls[i] = it->second;
        }
        html[i] = read_sample_html(s);
        if (s.metadata.contains("source_id")) {
            const auto it = originals.find(source_of(s));
            if (it != originals.end() && it->second->image.width() == s.image.width() &&
                it->second->image.height() == s.image.height())
                quality[i] = Quality{ssim(it->second->image, s.image), psnr(it->second->image, s.image)};
        }
    }

    std::vector<std::unique_ptr<Runner>> runners;
    std::optional<DocumentFrequency> df;
    for (const auto& e : detectors) {
        e.validate();
        auto r = std::make_unique<Runner>();
        r->entry = e;
        switch (e.kind) {
            case DetectorKind::emd:
                r->emd = std::make_unique<EmdDetector>(refs, e.threshold, e.score_semantics);
                break;
            case DetectorKind::profile:
                if (!df) df = DocumentFrequency::from_reference_list(refs);
                r->profile = std::make_unique<ProfileDetector>(refs, *df, e.threshold, options.keywords);
                break;
            case DetectorKind::external:
                for (std::size_t k = 0; k < e.processes; ++k) {
                    r->external.push_back(std::make_unique<ExternalDetector>(e, refs));
                    r->locks.push_back(std::make_unique<std::mutex>());
                }
                break;
        }
        runners.push_back(std::move(r));
    }

    const std::size_t total = samples.size() * runners.size();
    std::vector<std::optional<EvalRecord>> slots(total);
    std::vector<std::optional<EvalError>> errors(total);
    std::atomic<std::size_t> next{0}, done{0};
    std::atomic<bool> abort{false};
    std::string abort_reason;
    std::mutex shared;
    const auto abort_at = static_cast<std::size_t>(
        std::ceil(options.abort_failure_rate * static_cast<double>(samples.size())));

    auto work = [&] {
        for (;;) {
            if (abort) return;
            const std::size_t t = next++;
            if (t >= total) return;
            Runner& run = *runners[t / samples.size()];
            const std::size_t i = t % samples.size();
            const auto& s = samples[i];
            try {
                Verdict v;
                if (run.emd) {
                    v = run.emd->detect(s.image);
                } else if (run.profile) {
                    v = run.profile->detect(s.image, urls[i], html[i]);
                } else {
                    const std::size_t shard = fnv1a64(s.id) % run.external.size();
                    ScreenshotSample req = s;
                    req.url = urls[i];
                    std::lock_guard lock(*run.locks[shard]);
                    v = run.external[shard]->detect(req).verdict;
                }
                EvalRecord rec;
                rec.sample_id = s.id;
                rec.detector_id = run.entry.id;
                rec.manipulation = manipulation_of(s);
                rec.url_mode = mode;
                rec.url = urls[i];
                rec.expected_brand = s.brand;
                rec.quality = quality[i];
                if (run.entry.domain_check && v.is_phishing() &&
                    verify_brand_domain(*v.brand, urls[i], refs, psl, options.domain_check)) {
                    v.label = Label::benign;
                    v.brand.reset();
                    v.box.reset();
                    rec.suppressed = true;
                }
                rec.verdict = std::move(v);
                slots[t] = std::move(rec);
            } catch (const AdapterError& e) {
                errors[t] = EvalError{s.id, run.entry.id, e.what()};
                if (++run.failures >= abort_at) {
                    std::lock_guard lock(shared);
                    if (!abort)
                        abort_reason = "detector '" + run.entry.id + "' failed on " + std::to_string(run.failures.load()) +
                                       " of " + std::to_string(samples.size()) + " samples; aborting the run";
                    abort = true;
                }
            } catch (const Error& e) {
                errors[t] = EvalError{s.id, run.entry.id, e.what()};
            }
            const std::size_t d = ++done;
            if (options.progress) {
                std::lock_guard lock(shared);
                options.progress(d, total);
            }
        }
    };

    const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.workers, total));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < n_workers; ++k) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (abort) throw AdapterError(abort_reason);

    for (auto& r : slots)
        if (r) result.records.push_back(std::move(*r));
    for (auto& e : errors)
        if (e) result.errors.push_back(std::move(*e));
    std::stable_sort(result.records.begin(), result.records.end(), [](const EvalRecord& a, const EvalRecord& b) {
        return std::tie(a.detector_id, a.sample_id) < std::tie(b.detector_id, b.sample_id);
    });
    return result;
}

}  // namespace phishbench
