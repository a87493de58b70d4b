#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace phishbench {

/// Public-suffix rule table (plain, `*.` wildcard and `!` exception rules).
class SuffixTable {
public:
    SuffixTable() = default;
    static SuffixTable from_text(std::string_view text);
    static SuffixTable load(const std::filesystem::path& path);
    /// The suffix list shipped with the harness (data/public_suffix_list.dat).
    static const SuffixTable& builtin();

    /// Number of labels (from the right) forming the public suffix of `host`.
    /// Hosts matching no rule fall back to the implicit `*` rule (1 label).
    std::size_t suffix_labels(const std::vector<std::string>& labels) const;
    std::size_t size() const { return rules_.size() + wildcards_.size() + exceptions_.size(); }

private:
    std::unordered_set<std::string> rules_;
    std::unordered_set<std::string> wildcards_;   // stored without the "*."
    std::unordered_set<std::string> exceptions_;  // stored without the "!"
};

struct DomainParts {
    std::string hostname;
    std::string registrable;
    std::string sld;
    std::string suffix;
    std::vector<std::string> labels;
    bool ip_literal = false;
};

/// Extracts the host from `url` (scheme optional) and splits it at the
/// longest-matching public suffix. Throws ParseError when no host is present.
DomainParts parse_registrable(std::string_view url, const SuffixTable& psl = SuffixTable::builtin());

/// Lower-cased host of a URL, without port or userinfo. Throws ParseError.
std::string extract_host(std::string_view url);

enum class TypoOp : unsigned {
    homoglyph = 1u << 0,
    adjacent_key = 1u << 1,
    omission = 1u << 2,
    duplication = 1u << 3,
    transposition = 1u << 4,
    hyphenation = 1u << 5,
    tld_swap = 1u << 6,
};

using TypoOps = unsigned;
inline constexpr TypoOps kAllTypoOps = 0x7F;
inline constexpr TypoOps operator|(TypoOp a, TypoOp b) { return static_cast<unsigned>(a) | static_cast<unsigned>(b); }
inline constexpr TypoOps operator|(TypoOps a, TypoOp b) { return a | static_cast<unsigned>(b); }
inline constexpr bool has(TypoOps set, TypoOp op) { return (set & static_cast<unsigned>(op)) != 0; }
TypoOps parse_typo_ops(std::string_view csv);

struct TyposquatOptions {
    TypoOps ops = kAllTypoOps;
    std::vector<std::string> swap_tlds = {"com", "net", "org", "info", "biz", "co", "io"};
};

/// Sorted, de-duplicated squats of `domain`'s second-level label. Never
/// contains `domain` itself; every entry is a syntactically valid hostname.
std::set<std::string> generate_typosquats(std::string_view domain, const TyposquatOptions& options = {},
                                          const SuffixTable& psl = SuffixTable::builtin());

}  // namespace phishbench
