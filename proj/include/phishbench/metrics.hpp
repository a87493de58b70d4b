#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phishbench/core.hpp"
#include "phishbench/detect.hpp"

namespace phishbench {

struct RateCounts {
    std::uint64_t n_p = 0;
    std::uint64_t n_tp = 0;
    std::uint64_t i_tp = 0;
    std::uint64_t n_b = 0;
    std::uint64_t n_fp = 0;
    std::uint64_t i_fp = 0;

    /// Throws ValidationError unless i_tp <= n_tp <= n_p and i_fp <= n_fp <= n_b.
    void validate() const;
    RateCounts& operator+=(const RateCounts& o);
    friend bool operator==(const RateCounts&, const RateCounts&) = default;
};

/// An exact ratio; undefined when the denominator is 0.
struct Ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 0;

    bool defined() const noexcept { return den != 0; }
    std::optional<double> value() const;
    /// Decimal rendering rounded half-up from the exact rational, or "null".
    std::string decimal(int places = 4) const;
    /// Percentage with two decimals and no sign, e.g. "65.59"; "—" when undefined.
    std::string percent() const;
    /// "k/n (pct%)" with thousands separators, "k/0 (—)" when undefined.
    std::string cell() const;

    /// Compares a/b == c/d exactly.
    friend bool same_value(const Ratio& a, const Ratio& b);
};

struct MetricsReport {
    Ratio tpr;
    Ratio ident_rate;
    Ratio ident_precision;
    Ratio fpr;
    Ratio false_ident;
    Ratio overall_false_brand;
    double mean_elapsed = 0;  // seconds per sample
};

MetricsReport compute_rates(const RateCounts& counts, double mean_elapsed = 0);

/// "1,234,567".
std::string with_thousands(std::uint64_t n);

// ---------------------------------------------------------------------------
// Image quality.

/// Grey-level SSIM: 11x11 Gaussian window (sigma 1.5) over valid positions,
/// C1 = (0.01*255)^2, C2 = (0.03*255)^2, averaged over windows. Images
/// narrower or shorter than 11 px use a window clipped to the image.
double ssim(const RgbImage& a, const RgbImage& b);
double ssim_gray(const std::vector<double>& a, const std::vector<double>& b, int width, int height);

/// 10*log10(255^2 / MSE) over all RGB samples; +inf when the images are equal.
double psnr(const RgbImage& a, const RgbImage& b);

// ---------------------------------------------------------------------------
// Evaluation.

enum class UrlMode { benign, squatted };
std::string_view to_string(UrlMode m);
UrlMode parse_url_mode(std::string_view text);

struct Quality {
    double ssim = 0;
    double psnr = 0;
    friend bool operator==(const Quality&, const Quality&) = default;
};

struct EvalRecord {
    std::string sample_id;
    std::string detector_id;
    std::string manipulation = "original";
    UrlMode url_mode = UrlMode::benign;
    std::string url;
    std::optional<std::string> expected_brand;
    Verdict verdict;
    bool suppressed = false;  // phishing verdict cleared by the domain check
    std::optional<Quality> quality;
};

struct EvalError {
    std::string sample_id;
    std::string detector_id;
    std::string message;
};

struct EvalOptions {
    std::size_t workers = 1;
    /// Sample id (or the variant's source id) -> squatted URL; required for
    /// UrlMode::squatted.
    std::map<std::string, std::string> squat_urls;
    /// Originals that manipulated samples are compared against when they are
    /// not part of the evaluated set themselves.
    const std::vector<ScreenshotSample>* originals = nullptr;
    DomainCheckOptions domain_check;
    KeywordOptions keywords;
    const SuffixTable* psl = nullptr;  // builtin when null
    /// A detector whose failures reach this fraction of its requests aborts the run.
    double abort_failure_rate = 0.5;
    std::function<void(std::size_t done, std::size_t total)> progress;
};

struct EvalResult {
    std::vector<EvalRecord> records;  // sorted by (detector, sample id)
    std::vector<EvalError> errors;
};

/// Manipulation label of a sample: metadata "manipulation" or "original".
std::string manipulation_of(const ScreenshotSample& s);

/// Runs every detector on every sample. Throws AdapterError when a detector
/// reaches the abort failure rate.
EvalResult evaluate(const std::vector<DetectorEntry>& detectors, const std::vector<ScreenshotSample>& samples,
                    const ReferenceList& refs, UrlMode mode, const EvalOptions& options = {});

/// Squatted URL for every original sample with a URL: the first typosquat of
/// its registrable domain (sorted order), keeping the URL's path.
std::map<std::string, std::string> build_squat_map(const std::vector<ScreenshotSample>& samples,
                                                   const SuffixTable& psl = SuffixTable::builtin());

/// Adds one record to `counts` per the url-mode accounting: squatted records
/// are phishing samples, benign records benign ones.
void accumulate(RateCounts& counts, const EvalRecord& r);

// ---------------------------------------------------------------------------
// Records and reports.

void write_records(const std::vector<EvalRecord>& records, const std::filesystem::path& path);
std::vector<EvalRecord> read_records(const std::filesystem::path& path);
std::string format_record(const EvalRecord& r);
EvalRecord parse_record(std::string_view line, std::size_t line_no = 0);

/// Row order used in reports: original, the visible manipulations, the
/// perturbation attacks, then anything else alphabetically.
int manipulation_rank(std::string_view name);

struct GroupKey {
    std::string detector;
    std::string manipulation;
    UrlMode url_mode = UrlMode::benign;
};

struct GroupSummary {
    GroupKey key;
    RateCounts counts;
    MetricsReport rates;
};

/// Groups by (detector, manipulation, url mode) in report order.
std::vector<GroupSummary> summarize(const std::vector<EvalRecord>& records);

std::string summary_csv(const std::vector<GroupSummary>& groups);
/// Fixed-width grids: detection (N_tp/N_p or N_fp/N_b) and identification
/// (I_tp/N_tp or I_fp/N_fp), one row per manipulation and one column per
/// (detector, url mode).
std::string text_grid(const std::vector<GroupSummary>& groups);
/// Bar chart of the detection rate per manipulation.
std::string detection_svg(const std::vector<GroupSummary>& groups);

/// Writes summary.csv, grid.txt and detection.svg into `out_dir`. Throws
/// ValidationError on an empty record set.
void report(const std::vector<EvalRecord>& records, const std::filesystem::path& out_dir);

}  // namespace phishbench
