#include "phishbench/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "phishbench/png_io.hpp"
#include "phishbench/text.hpp"

namespace fs = std::filesystem;

namespace phishbench {
namespace {

constexpr std::string_view kNone = "-";

std::optional<std::string> optional_field(const std::string& f) {
    if (f == kNone || f.empty()) return std::nullopt;
    return f;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_relative()) path = base / path;
    return path.lexically_normal();
}

LogoRegion parse_region(const std::string& text, std::size_t line) {
    const auto parts = split(text, ',');
    if (parts.size() != 4 && parts.size() != 5)
        throw ParseError("logo region must be x,y,w,h[,confidence]: '" + text + "'", line);
    LogoRegion r;
    int* ints[] = {&r.x, &r.y, &r.w, &r.h};
    for (int i = 0; i < 4; ++i) {
        const auto& p = parts[i];
        auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), *ints[i]);
        if (ec != std::errc() || ptr != p.data() + p.size())
            throw ParseError("bad integer in logo region: '" + text + "'", line);
    }
    if (parts.size() == 5) {
        try {
            std::size_t used = 0;
            r.confidence = std::stod(parts[4], &used);
            if (used != parts[4].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError("bad confidence in logo region: '" + text + "'", line);
        }
        if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
            throw ParseError("logo region confidence outside [0,1]", line);
    }
    if (r.w < 1 || r.h < 1) throw ParseError("logo region must have w,h >= 1", line);
    return r;
}

bool valid_id(std::string_view id) {
    if (id.empty() || id == kNone) return false;
    return std::none_of(id.begin(), id.end(), [](char c) {
        return c == '/' || c == '\\' || std::isspace(static_cast<unsigned char>(c));
    });
}

DatasetManifest parse_manifest(const fs::path& path, bool decode_images) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open manifest: " + path.string());

    DatasetManifest m;
    m.base_dir = fs::absolute(path.parent_path().empty() ? fs::path(".") : path.parent_path()).lexically_normal();
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string_view body = trim(std::string_view(line).substr(1));
            if (starts_with(body, "seed:")) {
                const auto v = trim(body.substr(5));
                auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), m.seed);
                if (ec != std::errc() || ptr != v.data() + v.size())
                    throw ParseError("bad seed header", lineno);
                m.seed_recorded = true;
            } else if (starts_with(body, "provenance:")) {
                m.provenance = std::string(trim(body.substr(11)));
            }
            continue;
        }
        const auto f = split(line, '\t');
        if (f.size() != 7) throw ParseError("expected 7 tab-separated fields, got " + std::to_string(f.size()), lineno);
        ScreenshotSample s;
        s.id = f[0];
        if (!valid_id(s.id)) throw ParseError("invalid sample id '" + s.id + "'", lineno);
        if (!seen.insert(s.id).second) throw ParseError("duplicate sample id '" + s.id + "'", lineno);
        if (f[1].empty() || f[1] == kNone) throw ParseError("missing image path", lineno);
        s.image_path = resolve(m.base_dir, f[1]);
        s.url = f[2] == kNone ? std::string() : f[2];
        if (auto h = optional_field(f[3])) s.html_path = resolve(m.base_dir, *h);
        s.brand = optional_field(f[4]);
        if (auto r = optional_field(f[5])) s.logo_region = parse_region(*r, lineno);
        s.cluster_id = optional_field(f[6]);

        if (decode_images) {
            try {
                s.image = read_png_rgb(s.image_path);
            } catch (const Error& e) {
                throw AssetError("sample '" + s.id + "': " + e.what());
            }
            validate(s);
        }
        if (s.html_path && !fs::exists(*s.html_path))
            throw AssetError("sample '" + s.id + "': html file not found: " + s.html_path->string());
        m.entries.push_back(std::move(s));
    }
    return m;
}

}  // namespace

void validate(const ScreenshotSample& s) {
    if (s.image.width() < 1 || s.image.height() < 1) throw AssetError("sample '" + s.id + "': empty image");
    if (s.logo_region && !s.logo_region->rect().inside(s.image.width(), s.image.height()))
        throw AssetError("sample '" + s.id + "': logo region exceeds image bounds");
}

const ScreenshotSample* DatasetManifest::find(std::string_view id) const {
    for (const auto& e : entries)
        if (e.id == id) return &e;
    return nullptr;
}

DatasetManifest load_manifest(const fs::path& path) { return parse_manifest(path, true); }
DatasetManifest load_manifest_descriptors(const fs::path& path) { return parse_manifest(path, false); }

std::string format_manifest_line(const ScreenshotSample& s, const fs::path& base_dir) {
    auto rel = [&](const fs::path& p) {
        const fs::path r = p.lexically_relative(base_dir);
        return (r.empty() || starts_with(r.string(), "..") ? p : r).generic_string();
    };
    std::ostringstream out;
    out << s.id << '\t' << rel(s.image_path) << '\t' << (s.url.empty() ? std::string(kNone) : s.url) << '\t'
        << (s.html_path ? rel(*s.html_path) : std::string(kNone)) << '\t' << s.brand.value_or(std::string(kNone))
        << '\t';
    if (s.logo_region) {
        const auto& r = *s.logo_region;
        out << r.x << ',' << r.y << ',' << r.w << ',' << r.h;
        if (r.confidence != 1.0) out << ',' << format_real(r.confidence);
    } else {
        out << kNone;
    }
    out << '\t' << s.cluster_id.value_or(std::string(kNone));
    return out.str();
}

void save_manifest(const DatasetManifest& m, const fs::path& path) {
    const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    fs::create_directories(base);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write manifest: " + path.string());
    out << "# seed: " << m.seed << '\n';
    if (!m.provenance.empty()) out << "# provenance: " << m.provenance << '\n';
    for (const auto& s : m.entries) out << format_manifest_line(s, fs::absolute(base).lexically_normal()) << '\n';
}

std::string_view to_string(ReferenceVariant v) { return v == ReferenceVariant::base ? "base" : "extended"; }

ReferenceVariant parse_reference_variant(std::string_view text) {
    if (text == "base") return ReferenceVariant::base;
    if (text == "extended" || text == "ext") return ReferenceVariant::extended;
    throw ConfigError("unknown reference variant '" + std::string(text) + "'");
}

const BrandReference* ReferenceList::find(std::string_view brand) const {
    auto it = brands.find(std::string(brand));
    return it == brands.end() ? nullptr : &it->second;
}

std::size_t ReferenceList::logo_count() const {
    std::size_t n = 0;
    for (const auto& [_, b] : brands) n += b.logos.size();
    return n;
}

std::size_t ReferenceList::screenshot_count() const {
    std::size_t n = 0;
    for (const auto& [_, b] : brands) n += b.screenshots.size();
    return n;
}

std::string normalize_domain(std::string_view text) {
    std::string d = to_lower(trim(text));
    if (d.empty()) throw ValidationError("empty domain");
    if (d.find("://") != std::string::npos || d.find('/') != std::string::npos ||
        d.find_first_of(" \t?#@:") != std::string::npos)
        throw ValidationError("domain must not carry a scheme, port or path: '" + std::string(text) + "'");
    if (d.back() == '.') d.pop_back();
    return d;
}

namespace {

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        if (to_lower(e.path().extension().string()) == ".png") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

ReferenceList load_reference_list(const fs::path& dir, ReferenceVariant variant) {
    if (!fs::is_directory(dir)) throw IOError("reference directory not found: " + dir.string());
    std::vector<fs::path> brand_dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) brand_dirs.push_back(e.path());
    std::sort(brand_dirs.begin(), brand_dirs.end());
    if (brand_dirs.empty()) throw ValidationError("reference list has no brands: " + dir.string());

    ReferenceList refs;
    refs.variant = variant;
    refs.root = dir;
    std::map<std::string, std::string> folded;
    for (const auto& bdir : brand_dirs) {
        BrandReference b;
        b.brand = bdir.filename().string();
        const std::string key = to_lower(b.brand);
        if (auto [it, fresh] = folded.emplace(key, b.brand); !fresh)
            throw ValidationError("brands '" + it->second + "' and '" + b.brand + "' differ only by case");
        for (const auto& p : sorted_pngs(bdir / "logos")) b.logos.push_back({p.filename().string(), read_png_rgba(p)});
        for (const auto& p : sorted_pngs(bdir / "screenshots"))
            b.screenshots.push_back({p.filename().string(), read_png_rgb(p)});
        if (b.logos.empty() && b.screenshots.empty())
            throw ValidationError("brand '" + b.brand + "' has no logos or screenshots");
        if (std::ifstream in(bdir / "domains.txt"); in) {
            std::string line;
            while (std::getline(in, line)) {
                const auto t = trim(line);
                if (t.empty() || t.front() == '#') continue;
                b.domains.push_back(normalize_domain(t));
            }
        }
        refs.brands.emplace(b.brand, std::move(b));
    }
    return refs;
}

void save_reference_list(const ReferenceList& refs, const fs::path& dir) {
    for (const auto& [name, b] : refs.brands) {
        const fs::path bdir = dir / name;
        fs::create_directories(bdir / "logos");
        fs::create_directories(bdir / "screenshots");
        for (const auto& l : b.logos) write_png(bdir / "logos" / l.file, l.image);
        for (const auto& s : b.screenshots) write_png(bdir / "screenshots" / s.file, s.image);
        std::ofstream out(bdir / "domains.txt", std::ios::binary);
        for (const auto& d : b.domains) out << d << '\n';
    }
}

std::string_view to_string(Label l) { return l == Label::benign ? "benign" : "phishing"; }

Label parse_label(std::string_view text) {
    if (text == "benign") return Label::benign;
    if (text == "phishing") return Label::phishing;
    throw ParseError("unknown label '" + std::string(text) + "'");
}

std::optional<std::string> verdict_problem(const Verdict& v, const ReferenceList& refs) {
    if (v.is_phishing()) {
        if (!v.brand || v.brand->empty()) return "phishing verdict without a brand";
        if (!refs.brands.contains(*v.brand)) return "brand '" + *v.brand + "' is not in the reference list";
    } else if (v.brand) {
        return "benign verdict must not name a brand";
    }
    return std::nullopt;
}

void check_superset(const ReferenceList& base, const ReferenceList& extended) {
    for (const auto& [name, _] : base.brands)
        if (!extended.brands.contains(name))
            throw ValidationError("extended reference list is missing base brand '" + name + "'");
}

}  // namespace phishbench
