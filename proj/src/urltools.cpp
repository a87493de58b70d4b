#include "phishbench/urltools.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "phishbench/errors.hpp"
#include "phishbench/text.hpp"

namespace phishbench {

// Generated from data/public_suffix_list.dat at configure time.
extern const char* const kBuiltinSuffixList;

namespace {

std::string join_tail(const std::vector<std::string>& labels, std::size_t k) {
    std::string out;
    for (std::size_t i = labels.size() - k; i < labels.size(); ++i) {
        if (!out.empty()) out += '.';
        out += labels[i];
    }
    return out;
}

bool is_ipv4(const std::vector<std::string>& labels) {
    if (labels.size() != 4) return false;
    for (const auto& l : labels) {
        if (l.empty() || l.size() > 3 || !std::all_of(l.begin(), l.end(), ::isdigit)) return false;
        if (std::stoi(l) > 255) return false;
    }
    return true;
}

bool valid_label(std::string_view l) {
    if (l.empty() || l.size() > 63 || l.front() == '-' || l.back() == '-') return false;
    return std::all_of(l.begin(), l.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    });
}

const std::map<char, std::string_view>& qwerty_neighbors() {
    static const std::map<char, std::string_view> m = {
        {'1', "2q"},     {'2', "3wq1"},   {'3', "4ew2"},   {'4', "5re3"},   {'5', "6tr4"},   {'6', "7yt5"},
        {'7', "8uy6"},   {'8', "9iu7"},   {'9', "0oi8"},   {'0', "po9"},    {'q', "12wa"},   {'w', "3esaq2"},
        {'e', "4rdsw3"}, {'r', "5tfde4"}, {'t', "6ygfr5"}, {'y', "7uhgt6"}, {'u', "8ijhy7"}, {'i', "9okju8"},
        {'o', "0plki9"}, {'p', "lo0"},    {'a', "qwsz"},   {'s', "edxzaw"}, {'d', "rfcxse"}, {'f', "tgvcdr"},
        {'g', "yhbvft"}, {'h', "ujnbgy"}, {'j', "ikmnhu"}, {'k', "olmji"},  {'l', "kop"},    {'z', "asx"},
        {'x', "zsdc"},   {'c', "xdfv"},   {'v', "cfgb"},   {'b', "vghn"},   {'n', "bhjm"},   {'m', "njk"},
    };
    return m;
}

constexpr std::array<std::pair<char, char>, 6> kHomoglyphs = {{
    {'o', '0'}, {'l', '1'}, {'i', '1'}, {'e', '3'}, {'a', '4'}, {'s', '5'},
}};

char homoglyph(char c) {
    for (auto [from, to] : kHomoglyphs)
        if (c == from) return to;
    return 0;
}

}  // namespace

SuffixTable SuffixTable::from_text(std::string_view text) {
    SuffixTable t;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto rule = trim(line);
        if (rule.empty() || rule.starts_with("//")) continue;
        // Rules end at the first whitespace.
        rule = rule.substr(0, rule.find_first_of(" \t"));
        std::string r = to_lower(rule);
        if (r.starts_with("!"))
            t.exceptions_.insert(r.substr(1));
        else if (r.starts_with("*."))
            t.wildcards_.insert(r.substr(2));
        else
            t.rules_.insert(r);
    }
    return t;
}

SuffixTable SuffixTable::load(const std::filesystem::path& path) { return from_text(read_file(path.string())); }

const SuffixTable& SuffixTable::builtin() {
    static const SuffixTable table = from_text(kBuiltinSuffixList);
    return table;
}

std::size_t SuffixTable::suffix_labels(const std::vector<std::string>& labels) const {
    const std::size_t n = labels.size();
    for (std::size_t k = 1; k <= n; ++k)
        if (exceptions_.contains(join_tail(labels, k))) return k - 1;
    std::size_t best = 1;
    for (std::size_t k = 1; k <= n; ++k) {
        if (rules_.contains(join_tail(labels, k))) best = std::max(best, k);
        if (k >= 2 && wildcards_.contains(join_tail(labels, k - 1))) best = std::max(best, k);
    }
    return best;
}

std::string extract_host(std::string_view url) {
    std::string_view s = trim(url);
    if (const auto p = s.find("://"); p != std::string_view::npos)
        s = s.substr(p + 3);
    else if (s.starts_with("//"))
        s = s.substr(2);
    s = s.substr(0, s.find_first_of("/?#"));
    if (const auto at = s.rfind('@'); at != std::string_view::npos) s = s.substr(at + 1);
    if (s.starts_with("[")) {
        const auto close = s.find(']');
        if (close == std::string_view::npos) throw ParseError("unterminated IPv6 literal in '" + std::string(url) + "'");
        return to_lower(s.substr(0, close + 1));
    }
    if (const auto colon = s.find(':'); colon != std::string_view::npos) s = s.substr(0, colon);
    std::string host = to_lower(s);
    while (!host.empty() && host.back() == '.') host.pop_back();
    if (host.empty()) throw ParseError("no hostname in '" + std::string(url) + "'");
    if (std::any_of(host.begin(), host.end(), [](unsigned char c) { return std::isspace(c) || c == '\\'; }))
        throw ParseError("invalid hostname in '" + std::string(url) + "'");
    return host;
}

DomainParts parse_registrable(std::string_view url, const SuffixTable& psl) {
    DomainParts d;
    d.hostname = extract_host(url);
    if (d.hostname.starts_with("[")) {
        d.ip_literal = true;
        d.registrable = d.hostname;
        return d;
    }
    d.labels = split(d.hostname, '.');
    if (std::any_of(d.labels.begin(), d.labels.end(), [](const std::string& l) { return l.empty(); }))
        throw ParseError("empty label in host '" + d.hostname + "'");
    if (is_ipv4(d.labels)) {
        d.ip_literal = true;
        d.registrable = d.hostname;
        return d;
    }
    const std::size_t k = psl.suffix_labels(d.labels);
    if (k >= d.labels.size()) throw ParseError("host '" + d.hostname + "' is itself a public suffix");
    d.suffix = join_tail(d.labels, k);
    d.sld = d.labels[d.labels.size() - k - 1];
    d.registrable = d.suffix.empty() ? d.sld : d.sld + "." + d.suffix;
    return d;
}

TypoOps parse_typo_ops(std::string_view csv) {
    static const std::map<std::string, TypoOp, std::less<>> names = {
        {"homoglyph", TypoOp::homoglyph},         {"adjacent_key", TypoOp::adjacent_key},
        {"omission", TypoOp::omission},           {"duplication", TypoOp::duplication},
        {"transposition", TypoOp::transposition}, {"hyphenation", TypoOp::hyphenation},
        {"tld_swap", TypoOp::tld_swap},
    };
    if (trim(csv) == "all") return kAllTypoOps;
    TypoOps ops = 0;
    for (const auto& part : split(csv, ',')) {
        const auto name = trim(part);
        if (name.empty()) continue;
        const auto it = names.find(name);
        if (it == names.end()) throw ValidationError("unknown typo operation '" + std::string(name) + "'");
        ops |= static_cast<unsigned>(it->second);
    }
    return ops;
}

std::set<std::string> generate_typosquats(std::string_view domain, const TyposquatOptions& options,
                                          const SuffixTable& psl) {
    const DomainParts parts = parse_registrable(domain, psl);
    if (parts.ip_literal) throw ParseError("cannot generate typosquats for an IP literal");
    const std::string& sld = parts.sld;
    const std::string suffix = "." + parts.suffix;
    const std::size_t n = sld.size();

    std::set<std::string> slds;
    auto add = [&](std::string s) {
        if (valid_label(s) && s.find("--") == std::string::npos) slds.insert(std::move(s));
    };

    if (has(options.ops, TypoOp::homoglyph)) {
        std::string all = sld;
        for (std::size_t i = 0; i < n; ++i) {
            if (const char g = homoglyph(sld[i])) {
                std::string one = sld;
                one[i] = g;
                add(one);
                all[i] = g;
            }
        }
        // Every occurrence of one letter at once (faceb00k), then all letters.
        for (auto [from, to] : kHomoglyphs) {
            if (sld.find(from) == std::string::npos) continue;
            std::string s = sld;
            std::replace(s.begin(), s.end(), from, to);
            add(s);
        }
        add(all);
    }
    if (has(options.ops, TypoOp::adjacent_key)) {
        const auto& keys = qwerty_neighbors();
        for (std::size_t i = 0; i < n; ++i) {
            const auto it = keys.find(sld[i]);
            if (it == keys.end()) continue;
            for (char c : it->second) {
                std::string s = sld;
                s[i] = c;
                add(s);
            }
        }
    }
    if (has(options.ops, TypoOp::omission))
        for (std::size_t i = 0; i < n; ++i) add(sld.substr(0, i) + sld.substr(i + 1));
    if (has(options.ops, TypoOp::duplication))
        for (std::size_t i = 0; i < n; ++i) add(sld.substr(0, i + 1) + sld.substr(i));
    if (has(options.ops, TypoOp::transposition))
        for (std::size_t i = 0; i + 1 < n; ++i) {
            std::string s = sld;
            std::swap(s[i], s[i + 1]);
            add(s);
        }
    if (has(options.ops, TypoOp::hyphenation))
        for (std::size_t i = 1; i < n; ++i) add(sld.substr(0, i) + "-" + sld.substr(i));

    std::set<std::string> out;
    for (const auto& s : slds) out.insert(s + suffix);
    if (has(options.ops, TypoOp::tld_swap))
        for (const auto& tld : options.swap_tlds) {
            const std::string t = to_lower(trim(tld));
            if (!t.empty()) out.insert(sld + "." + t);
        }
    out.erase(parts.registrable);
    // Keep only squats that parse back to a registrable domain.
    for (auto it = out.begin(); it != out.end();) {
        try {
            const auto p = parse_registrable(*it, psl);
            it = p.registrable == *it ? std::next(it) : out.erase(it);
        } catch (const ParseError&) {
            it = out.erase(it);
        }
    }
    return out;
}

}  // namespace phishbench
