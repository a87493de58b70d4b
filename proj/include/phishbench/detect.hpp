#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "phishbench/core.hpp"
#include "phishbench/urltools.hpp"

namespace phishbench {

// ---------------------------------------------------------------------------
// Earth Mover's Distance over colour + position signatures.

struct SignatureBin {
    std::array<double, 5> feature{};  // r, g, b, cx, cy in [0, 1]
    double weight = 0;
};

struct Signature {
    std::vector<SignatureBin> bins;
};

/// Colours quantised to 4 bits per channel; the `max_bins` most populated
/// bins are kept (ties: lower bin index first). Each feature holds the bin's
/// colour centre and the member pixels' centroid normalised by the image
/// size; weights are renormalised over the kept bins.
Signature emd_signature(const RgbImage& image, std::size_t max_bins = 20);

/// Ground distance: Euclidean distance between features scaled by 1/sqrt(5).
double ground_distance(const SignatureBin& a, const SignatureBin& b);

/// Exact minimum-cost transport between two signatures (successive shortest
/// augmenting paths). Result in [0, 1].
double emd_distance(const Signature& a, const Signature& b);

enum class ScoreSemantics { similarity_ge, distance_le };
std::string_view to_string(ScoreSemantics s);
ScoreSemantics parse_score_semantics(std::string_view text);

/// Screenshot-level EMD detector. Reference signatures are computed once.
class EmdDetector {
public:
    EmdDetector(const ReferenceList& refs, double threshold,
                ScoreSemantics semantics = ScoreSemantics::similarity_ge, std::size_t max_bins = 20);

    /// Best brand over every reference screenshot; phishing iff the score
    /// passes the threshold. Verdict score is 1 - EMD for similarity_ge and
    /// the raw EMD for distance_le.
    Verdict detect(const RgbImage& screenshot) const;

private:
    struct Ref {
        std::string brand;
        Signature signature;
    };
    std::vector<Ref> refs_;
    double threshold_;
    ScoreSemantics semantics_;
    std::size_t max_bins_;
};

Verdict emd_detect(const ScreenshotSample& sample, const ReferenceList& refs, double threshold,
                   ScoreSemantics semantics = ScoreSemantics::similarity_ge);

// ---------------------------------------------------------------------------
// TF-IDF keyword profiles.

/// Document frequencies over a reference corpus.
struct DocumentFrequency {
    std::size_t documents = 0;
    std::map<std::string, std::size_t> counts;

    void add_document(const std::vector<std::string>& tokens);
    /// Unseen tokens count as appearing in one document.
    std::size_t df(const std::string& token) const;

    /// One document per brand: the brand name plus its domains' tokens.
    static DocumentFrequency from_reference_list(const ReferenceList& refs);
};

struct KeywordProfile {
    std::vector<std::pair<std::string, double>> terms;  // weight non-increasing
    bool contains(std::string_view token) const;
};

/// Lower-cased ASCII alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);
/// Tokens of the URL's host and path (scheme, query and fragment dropped).
std::vector<std::string> url_tokens(std::string_view url);
/// Text a browser would render: tags, comments, script and style removed,
/// common entities decoded.
std::string visible_text(std::string_view html);
bool is_stopword(std::string_view token);

struct KeywordOptions {
    std::size_t top_k = 10;
    bool remove_stopwords = false;
};

KeywordProfile extract_keywords(std::string_view url, std::string_view html, const DocumentFrequency& df,
                                const KeywordOptions& options = {});

// ---------------------------------------------------------------------------
// Keypoint matching (Harris corners + gradient-orientation histograms).

struct Keypoint {
    int x = 0;
    int y = 0;
    double response = 0;
};

struct KeypointSet {
    std::vector<Keypoint> points;
    std::vector<std::array<float, 128>> descriptors;
};

struct KeypointOptions {
    std::size_t max_keypoints = 200;
    double ratio = 0.75;
};

/// Harris corners (k = 0.04, 5x5 Gaussian window, 3x3 non-max suppression,
/// response >= 1% of the image maximum), strongest first. Each descriptor is
/// a 16x16 patch split into 4x4 cells of 8-bin gradient-orientation
/// histograms, L2-normalised. Corners closer than 8 px to the border are
/// skipped, so images need to be at least 16x16 to yield any keypoints.
KeypointSet detect_keypoints(const RgbImage& image, const KeypointOptions& options = {});

/// Nearest-neighbour matches from `query` into `train` that pass the ratio test.
std::size_t match_keypoints(const KeypointSet& query, const KeypointSet& train, double ratio = 0.75);

std::size_t keypoint_match(const RgbImage& a, const RgbImage& b, const KeypointOptions& options = {});

/// Keyword-filtered logo matching in the style of profile-based detectors.
class ProfileDetector {
public:
    ProfileDetector(const ReferenceList& refs, DocumentFrequency df, double threshold, KeywordOptions keywords = {},
                    KeypointOptions keypoints = {});

    /// Candidate brands are those named in the keyword profile (all brands
    /// when none is). Phishing iff the best logo match count over the
    /// candidates reaches the threshold.
    Verdict detect(const RgbImage& screenshot, std::string_view url, std::string_view html) const;

    /// Candidate set used for a profile; exposed for tests.
    std::vector<std::string> candidates(const KeywordProfile& profile) const;
    const KeywordProfile profile(std::string_view url, std::string_view html) const;

private:
    struct Logo {
        std::string brand;
        KeypointSet keypoints;
    };
    std::vector<Logo> logos_;
    std::vector<std::string> brands_;
    DocumentFrequency df_;
    double threshold_;
    KeywordOptions keyword_options_;
    KeypointOptions keypoint_options_;
};

Verdict profile_detect(const ScreenshotSample& sample, const ReferenceList& refs, double threshold,
                       const DocumentFrequency& df, const KeywordOptions& keywords = {});

/// Reads the sample's HTML file, or returns an empty string when it has none.
std::string read_sample_html(const ScreenshotSample& sample);

// ---------------------------------------------------------------------------
// Brand / domain consistency.

struct DomainCheckOptions {
    bool brand_token_scan = false;
};

/// True when the URL's registrable domain is one of the brand's reference
/// domains, or (with brand_token_scan) when the second-level label of any
/// reference domain appears as a label of the URL's host.
bool verify_brand_domain(const std::string& brand, std::string_view url, const ReferenceList& refs,
                         const SuffixTable& psl = SuffixTable::builtin(), const DomainCheckOptions& options = {});

// ---------------------------------------------------------------------------
// Detector configuration and out-of-process adapters.

enum class DetectorKind { emd, profile, external };
std::string_view to_string(DetectorKind k);
DetectorKind parse_detector_kind(std::string_view text);

struct DetectorEntry {
    std::string id;
    DetectorKind kind = DetectorKind::emd;
    double threshold = 0;
    ScoreSemantics score_semantics = ScoreSemantics::similarity_ge;
    std::string adapter_cmd;
    bool domain_check = true;
    double timeout_seconds = 120;
    std::size_t processes = 4;  // external only: adapter processes per run

    /// Throws ConfigError when the entry violates its invariants. External
    /// entries without a command parse but fail here, so the shipped
    /// defaults can list thresholds for adapters that are not installed.
    void validate() const;
};

/// Parses a detector config (JSON object keyed by detector id).
std::map<std::string, DetectorEntry> parse_detector_config(std::string_view json_text);
std::map<std::string, DetectorEntry> load_detector_config(const std::filesystem::path& path);
/// The shipped defaults (data/detectors.json).
const std::map<std::string, DetectorEntry>& default_detector_config();
std::string detector_config_json(const std::map<std::string, DetectorEntry>& entries);

struct AdapterResponse {
    Verdict verdict;
    std::string raw;  // the response line as received
};

/// A long-lived adapter process speaking the newline-delimited JSON protocol
/// over its stdin/stdout. The child gets /dev/null as stderr. The process is
/// started lazily by the first request and again after any failure; creating
/// one sets SIGPIPE to ignored for the whole program.
class AdapterProcess {
public:
    AdapterProcess(std::string command, std::chrono::milliseconds timeout);
    ~AdapterProcess();
    AdapterProcess(const AdapterProcess&) = delete;
    AdapterProcess& operator=(const AdapterProcess&) = delete;

    /// Sends one request line and waits for one response line.
    std::string request(const std::string& line);
    bool alive() const noexcept { return pid_ > 0; }
    void shutdown() noexcept;

private:
    void start();
    std::string read_line();
    [[noreturn]] void die(const std::string& why, bool timeout);

    std::string command_;
    std::chrono::milliseconds timeout_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

/// Wraps an AdapterProcess, restarting it after crashes and timeouts.
/// Samples without an image file on disk are written as PNG to a scratch
/// directory (a fresh temporary one, removed on destruction, when none is
/// given).
class ExternalDetector {
public:
    ExternalDetector(DetectorEntry entry, const ReferenceList& refs, std::filesystem::path scratch_dir = {});
    ~ExternalDetector();
    ExternalDetector(const ExternalDetector&) = delete;
    ExternalDetector& operator=(const ExternalDetector&) = delete;

    AdapterResponse detect(const ScreenshotSample& sample);

    /// Builds the request line for `sample`; the screenshot must exist on disk.
    static std::string request_line(const ScreenshotSample& sample, const std::filesystem::path& screenshot,
                                    const std::filesystem::path& refs_root);
    /// Validates a response line. Throws ProtocolError.
    static Verdict parse_response(const std::string& line, const std::string& expected_id, const ReferenceList& refs);

private:
    DetectorEntry entry_;
    const ReferenceList& refs_;
    std::filesystem::path scratch_;
    bool owns_scratch_ = false;
    std::unique_ptr<AdapterProcess> process_;
};

/// One request, one response against a freshly started adapter.
Verdict run_external_detector(const DetectorEntry& entry, const ScreenshotSample& sample, const ReferenceList& refs);

}  // namespace phishbench
