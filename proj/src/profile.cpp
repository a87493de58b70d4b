#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "phishbench/detect.hpp"
#include "phishbench/errors.hpp"
#include "phishbench/text.hpp"

namespace phishbench {

// Generated from data/detectors.json at configure time.
extern const char* const kBuiltinDetectorConfig;

ProfileDetector::ProfileDetector(const ReferenceList& refs, DocumentFrequency df, double threshold,
                                 KeywordOptions keywords, KeypointOptions keypoints)
    : df_(std::move(df)), threshold_(threshold), keyword_options_(keywords), keypoint_options_(keypoints) {
    for (const auto& [name, brand] : refs.brands) {
        brands_.push_back(name);
        for (const auto& logo : brand.logos)
            logos_.push_back({name, detect_keypoints(flatten(logo.image), keypoint_options_)});
    }
}

const KeywordProfile ProfileDetector::profile(std::string_view url, std::string_view html) const {
    return extract_keywords(url, html, df_, keyword_options_);
}

std::vector<std::string> ProfileDetector::candidates(const KeywordProfile& profile) const {
    std::vector<std::string> out;
    for (const auto& b : brands_) {
        const auto tokens = tokenize(b);
        if (!tokens.empty() &&
            std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return profile.contains(t); }))
            out.push_back(b);
    }
    return out.empty() ? brands_ : out;
}

Verdict ProfileDetector::detect(const RgbImage& screenshot, std::string_view url, std::string_view html) const {
    const auto start = std::chrono::steady_clock::now();
    const auto cands = candidates(profile(url, html));
    const KeypointSet shot = detect_keypoints(screenshot, keypoint_options_);
    std::size_t best = 0;
    const std::string* brand = nullptr;
    for (const auto& logo : logos_) {
        if (!std::binary_search(cands.begin(), cands.end(), logo.brand)) continue;
        const std::size_t n = match_keypoints(shot, logo.keypoints, keypoint_options_.ratio);
        if (!brand || n > best) {
            best = n;
            brand = &logo.brand;
        }
    }
    const double score = static_cast<double>(best);
    Verdict v = brand && score >= threshold_ ? Verdict::phishing(*brand, score) : Verdict::benign(score);
    v.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return v;
}

std::string read_sample_html(const ScreenshotSample& sample) {
    if (!sample.html_path) return {};
    return read_file(sample.html_path->string());
}

Verdict profile_detect(const ScreenshotSample& sample, const ReferenceList& refs, double threshold,
                       const DocumentFrequency& df, const KeywordOptions& keywords) {
    return ProfileDetector(refs, df, threshold, keywords).detect(sample.image, sample.url, read_sample_html(sample));
}

bool verify_brand_domain(const std::string& brand, std::string_view url, const ReferenceList& refs,
                         const SuffixTable& psl, const DomainCheckOptions& options) {
    const BrandReference* ref = refs.find(brand);
    if (!ref) throw ValidationError("brand '" + brand + "' is not in the reference list");
    const DomainParts parts = parse_registrable(url, psl);
    for (const auto& d : ref->domains)
        if (d == parts.registrable) return true;
    if (!options.brand_token_scan || parts.ip_literal) return false;
    for (const auto& d : ref->domains) {
        std::string token;
        try {
            token = parse_registrable(d, psl).sld;
        } catch (const ParseError&) {
            continue;
        }
        if (!token.empty() && std::find(parts.labels.begin(), parts.labels.end(), token) != parts.labels.end())
            return true;
    }
    return false;
}

std::string_view to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::emd: return "emd";
        case DetectorKind::profile: return "profile";
        case DetectorKind::external: return "external";
    }
    return "?";
}

DetectorKind parse_detector_kind(std::string_view text) {
    if (text == "emd") return DetectorKind::emd;
    if (text == "profile") return DetectorKind::profile;
    if (text == "external") return DetectorKind::external;
    throw ConfigError("unknown detector kind '" + std::string(text) + "'");
}

void DetectorEntry::validate() const {
    if (id.empty()) throw ConfigError("detector entry without an id");
    if (!std::isfinite(threshold)) throw ConfigError("detector '" + id + "': threshold must be finite");
    if (!(timeout_seconds > 0)) throw ConfigError("detector '" + id + "': timeout must be positive");
    if (kind == DetectorKind::external) {
        if (trim(adapter_cmd).empty()) throw ConfigError("detector '" + id + "': external detector needs adapter_cmd");
        if (processes == 0) throw ConfigError("detector '" + id + "': processes must be at least 1");
    }
}

std::map<std::string, DetectorEntry> parse_detector_config(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("detector config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("detector config must be a JSON object keyed by detector id");
    std::map<std::string, DetectorEntry> out;
    for (const auto& [id, v] : j.items()) {
        if (!v.is_object()) throw ConfigError("detector '" + id + "' must be an object");
        DetectorEntry e;
        e.id = id;
        try {
            e.kind = parse_detector_kind(v.at("kind").get<std::string>());
            e.threshold = v.at("threshold").get<double>();
            if (v.contains("score_semantics"))
                e.score_semantics = parse_score_semantics(v["score_semantics"].get<std::string>());
            if (v.contains("adapter_cmd")) e.adapter_cmd = v["adapter_cmd"].get<std::string>();
            if (v.contains("domain_check")) e.domain_check = v["domain_check"].get<bool>();
            if (v.contains("timeout_seconds")) e.timeout_seconds = v["timeout_seconds"].get<double>();
            if (v.contains("processes")) e.processes = v["processes"].get<std::size_t>();
        } catch (const nlohmann::json::exception& ex) {
            throw ConfigError("detector '" + id + "': " + ex.what());
        }
        if (!std::isfinite(e.threshold)) throw ConfigError("detector '" + id + "': threshold must be finite");
        out.emplace(id, std::move(e));
    }
    return out;
}

std::map<std::string, DetectorEntry> load_detector_config(const std::filesystem::path& path) {
    return parse_detector_config(read_file(path.string()));
}

const std::map<std::string, DetectorEntry>& default_detector_config() {
    static const auto config = parse_detector_config(kBuiltinDetectorConfig);
    return config;
}

std::string detector_config_json(const std::map<std::string, DetectorEntry>& entries) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [id, e] : entries) {
        nlohmann::ordered_json v;
        v["kind"] = to_string(e.kind);
        v["threshold"] = e.threshold;
        v["score_semantics"] = to_string(e.score_semantics);
        v["domain_check"] = e.domain_check;
        if (e.kind == DetectorKind::external) {
            v["adapter_cmd"] = e.adapter_cmd;
            v["timeout_seconds"] = e.timeout_seconds;
            v["processes"] = e.processes;
        }
        j[id] = std::move(v);
    }
    return j.dump(2);
}

}  // namespace phishbench
