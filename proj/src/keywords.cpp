#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>

#include "phishbench/detect.hpp"
#include "phishbench/text.hpp"

namespace phishbench {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Case-insensitive search for `needle` (lower-case) starting at `from`.
std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from) {
    if (needle.size() > hay.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
        std::size_t k = 0;
        while (k < needle.size() && std::tolower(static_cast<unsigned char>(hay[i + k])) == needle[k]) ++k;
        if (k == needle.size()) return i;
    }
    return std::string_view::npos;
}

}  // namespace

void DocumentFrequency::add_document(const std::vector<std::string>& tokens) {
    ++documents;
    for (const auto& t : std::set<std::string>(tokens.begin(), tokens.end())) ++counts[t];
}

std::size_t DocumentFrequency::df(const std::string& token) const {
    const auto it = counts.find(token);
    return it == counts.end() ? 1 : std::max<std::size_t>(it->second, 1);
}

DocumentFrequency DocumentFrequency::from_reference_list(const ReferenceList& refs) {
    DocumentFrequency df;
    for (const auto& [name, brand] : refs.brands) {
        std::vector<std::string> doc = tokenize(name);
        for (const auto& d : brand.domains) {
            auto t = tokenize(d);
            doc.insert(doc.end(), t.begin(), t.end());
        }
        df.add_document(doc);
    }
    return df;
}

bool KeywordProfile::contains(std::string_view token) const {
    return std::any_of(terms.begin(), terms.end(), [&](const auto& t) { return t.first == token; });
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (is_alnum(c)) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> url_tokens(std::string_view url) {
    std::string_view s = trim(url);
    if (const auto p = s.find("://"); p != std::string_view::npos) s = s.substr(p + 3);
    s = s.substr(0, s.find_first_of("?#"));
    // Drop userinfo and port from the authority part.
    const auto slash = s.find('/');
    std::string_view authority = s.substr(0, slash);
    const std::string_view path = slash == std::string_view::npos ? std::string_view{} : s.substr(slash);
    if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);
    if (!authority.starts_with("["))
        if (const auto colon = authority.find(':'); colon != std::string_view::npos) authority = authority.substr(0, colon);
    auto out = tokenize(authority);
    auto rest = tokenize(path);
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

std::string visible_text(std::string_view html) {
    std::string out;
    std::size_t i = 0;
    while (i < html.size()) {
        const char c = html[i];
        if (c != '<') {
            if (c == '&') {
                static const std::pair<std::string_view, char> entities[] = {
                    {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&#39;", '\''}, {"&nbsp;", ' '}};
                bool hit = false;
                for (auto [name, ch] : entities)
                    if (ifind(html.substr(i, name.size()), name, 0) == 0) {
                        out += ch;
                        i += name.size();
                        hit = true;
                        break;
                    }
                if (hit) continue;
            }
            out += c;
            ++i;
            continue;
        }
        if (html.substr(i).starts_with("<!--")) {
            const auto end = html.find("-->", i + 4);
            i = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        const auto close = html.find('>', i);
        if (close == std::string_view::npos) break;
        std::string tag = to_lower(html.substr(i + 1, close - i - 1));
        const std::string name = tag.substr(0, tag.find_first_of(" \t\r\n/"));
        i = close + 1;
        if (name == "script" || name == "style") {
            const auto end = ifind(html, "</" + name, i);
            if (end == std::string_view::npos) break;
            const auto gt = html.find('>', end);
            i = gt == std::string_view::npos ? html.size() : gt + 1;
        }
        out += ' ';  // tags separate words
    }
    return out;
}

bool is_stopword(std::string_view token) {
    static const std::set<std::string, std::less<>> words = {
        "a",    "an",   "and",  "are",  "as",   "at",   "be",   "by",   "for",  "from", "has",  "have",
        "in",   "is",   "it",   "its",  "of",   "on",   "or",   "that", "the",  "this", "to",   "was",
        "were", "will", "with", "you",  "your", "we",   "our",  "not",  "but",  "if",   "all",  "can",
    };
    return words.contains(token);
}

KeywordProfile extract_keywords(std::string_view url, std::string_view html, const DocumentFrequency& df,
                                const KeywordOptions& options) {
    std::vector<std::string> tokens = url_tokens(url);
    auto text = tokenize(visible_text(html));
    tokens.insert(tokens.end(), text.begin(), text.end());

    std::unordered_map<std::string, std::size_t> tf;
    for (auto& t : tokens)
        if (!options.remove_stopwords || !is_stopword(t)) ++tf[t];

    const double n = static_cast<double>(std::max<std::size_t>(df.documents, 1));
    KeywordProfile p;
    for (const auto& [token, count] : tf)
        p.terms.emplace_back(token, static_cast<double>(count) * std::log(n / static_cast<double>(df.df(token))));
    std::sort(p.terms.begin(), p.terms.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (p.terms.size() > options.top_k) p.terms.resize(options.top_k);
    return p;
}

}  // namespace phishbench
