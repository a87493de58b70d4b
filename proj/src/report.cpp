#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "phishbench/errors.hpp"
#include "phishbench/manip.hpp"
#include "phishbench/metrics.hpp"
#include "phishbench/perturb.hpp"
#include "phishbench/text.hpp"

namespace phishbench {
namespace {

constexpr std::string_view kRecordsHeader =
    "# sample_id\tdetector\tmanipulation\turl_mode\turl\texpected_brand\tlabel\tbrand\tscore\telapsed\tsuppressed\tssim"
    "\tpsnr";

std::string opt(const std::optional<std::string>& s) { return s ? *s : "-"; }

std::optional<std::string> unopt(const std::string& s) {
    if (s == "-") return std::nullopt;
    return s;
}

void check_field(const std::string& v, const char* what) {
    if (v.find_first_of("\t\n\r") != std::string::npos)
        throw ValidationError(std::string("record ") + what + " contains a tab or newline");
}

// Display width of UTF-8 text (one column per code point).
std::size_t columns(std::string_view s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width) { return s + std::string(width - std::min(width, columns(s)), ' '); }

struct Column {
    std::string detector;
    UrlMode mode;
    auto key() const { return std::tie(detector, mode); }
    bool operator<(const Column& o) const { return key() < o.key(); }
};

struct RowKey {
    int rank;
    std::string name;
    bool operator<(const RowKey& o) const { return std::tie(rank, name) < std::tie(o.rank, o.name); }
};

Ratio detection_ratio(const GroupSummary& g) { return g.key.url_mode == UrlMode::squatted ? g.rates.tpr : g.rates.fpr; }
Ratio identification_ratio(const GroupSummary& g) {
    return g.key.url_mode == UrlMode::squatted ? g.rates.ident_precision : g.rates.false_ident;
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string format_record(const EvalRecord& r) {
    check_field(r.sample_id, "sample id");
    check_field(r.detector_id, "detector id");
    check_field(r.manipulation, "manipulation");
    check_field(r.url, "url");
    std::vector<std::string> f = {
        r.sample_id,
        r.detector_id,
        r.manipulation,
        std::string(to_string(r.url_mode)),
        r.url.empty() ? "-" : r.url,
        opt(r.expected_brand),
        std::string(to_string(r.verdict.label)),
        opt(r.verdict.brand),
        format_real(r.verdict.score),
        format_real(r.verdict.elapsed),
        r.suppressed ? "1" : "0",
        r.quality ? format_real(r.quality->ssim) : "-",
        r.quality ? format_real(r.quality->psnr) : "-",
    };
    return join(f, "\t");
}

EvalRecord parse_record(std::string_view line, std::size_t line_no) {
    const auto f = split(line, '\t');
    if (f.size() != 13) throw ParseError("record needs 13 tab-separated fields, got " + std::to_string(f.size()), line_no);
    try {
        EvalRecord r;
        r.sample_id = f[0];
        r.detector_id = f[1];
        r.manipulation = f[2];
        r.url_mode = parse_url_mode(f[3]);
        r.url = f[4] == "-" ? "" : f[4];
        r.expected_brand = unopt(f[5]);
        r.verdict.label = parse_label(f[6]);
        r.verdict.brand = unopt(f[7]);
        r.verdict.score = parse_real(f[8]);
        r.verdict.elapsed = parse_real(f[9]);
        if (f[10] != "0" && f[10] != "1") throw ParseError("suppressed must be 0 or 1");
        r.suppressed = f[10] == "1";
        if ((f[11] == "-") != (f[12] == "-")) throw ParseError("ssim and psnr must both be present or absent");
        if (f[11] != "-") r.quality = Quality{parse_real(f[11]), parse_real(f[12])};
        if (r.verdict.is_phishing() != r.verdict.brand.has_value())
            throw ParseError("brand must be set exactly for phishing verdicts");
        return r;
    } catch (const ParseError& e) {
        throw ParseError(e.what(), line_no);
    } catch (const Error& e) {
        throw ParseError(e.what(), line_no);
    }
}

void write_records(const std::vector<EvalRecord>& records, const std::filesystem::path& path) {
    std::ostringstream out;
    out << kRecordsHeader << '\n';
    for (const auto& r : records) out << format_record(r) << '\n';
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IOError("cannot write " + path.string());
    f << out.str();
    if (!f) throw IOError("failed writing " + path.string());
}

std::vector<EvalRecord> read_records(const std::filesystem::path& path) {
    std::istringstream in(read_file(path.string()));
    std::vector<EvalRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line.starts_with("#")) continue;
        out.push_back(parse_record(line, n));
    }
    return out;
}

int manipulation_rank(std::string_view name) {
    if (name == "original") return 0;
    for (std::size_t i = 0; i < kAllManipulationKinds.size(); ++i)
        if (to_string(kAllManipulationKinds[i]) == name) return 1 + static_cast<int>(i);
    constexpr AttackKind attacks[] = {AttackKind::FGSM, AttackKind::PGD, AttackKind::CW};
    for (std::size_t i = 0; i < 3; ++i)
        if (to_string(attacks[i]) == name) return 1 + static_cast<int>(kAllManipulationKinds.size() + i);
    return 1000;
}

std::vector<GroupSummary> summarize(const std::vector<EvalRecord>& records) {
    struct Acc {
        RateCounts counts;
        double elapsed = 0;
        std::size_t n = 0;
    };
    using Key = std::tuple<std::string, int, std::string, UrlMode>;
    std::map<Key, Acc> groups;
    for (const auto& r : records) {
        auto& a = groups[{r.detector_id, manipulation_rank(r.manipulation), r.manipulation, r.url_mode}];
        accumulate(a.counts, r);
        a.elapsed += r.verdict.elapsed;
        ++a.n;
    }
    std::vector<GroupSummary> out;
    for (const auto& [k, a] : groups) {
        GroupSummary g;
        g.key = {std::get<0>(k), std::get<2>(k), std::get<3>(k)};
        g.counts = a.counts;
        g.rates = compute_rates(a.counts, a.n ? a.elapsed / static_cast<double>(a.n) : 0.0);
        out.push_back(std::move(g));
    }
    return out;
}

std::string summary_csv(const std::vector<GroupSummary>& groups) {
    std::ostringstream out;
    out << "detector,manipulation,url_mode,n_p,n_tp,i_tp,n_b,n_fp,i_fp,tpr,ident_rate,ident_precision,fpr,"
           "false_ident,overall_false_brand,mean_elapsed_s\n";
    for (const auto& g : groups) {
        const auto& c = g.counts;
        const auto& r = g.rates;
        char elapsed[32];
        std::snprintf(elapsed, sizeof elapsed, "%.6f", r.mean_elapsed);
        out << g.key.detector << ',' << g.key.manipulation << ',' << to_string(g.key.url_mode) << ',' << c.n_p << ','
            << c.n_tp << ',' << c.i_tp << ',' << c.n_b << ',' << c.n_fp << ',' << c.i_fp << ',' << r.tpr.decimal() << ','
            << r.ident_rate.decimal() << ',' << r.ident_precision.decimal() << ',' << r.fpr.decimal() << ','
            << r.false_ident.decimal() << ',' << r.overall_false_brand.decimal() << ',' << elapsed << '\n';
    }
    return out.str();
}

std::string text_grid(const std::vector<GroupSummary>& groups) {
    std::set<Column> cols;
    std::set<RowKey> rows;
    std::map<std::pair<std::string, Column>, const GroupSummary*> cell;
    for (const auto& g : groups) {
        const Column c{g.key.detector, g.key.url_mode};
        cols.insert(c);
        rows.insert({manipulation_rank(g.key.manipulation), g.key.manipulation});
        cell[{g.key.manipulation, c}] = &g;
    }
    std::ostringstream out;
    auto table = [&](const std::string& title, Ratio (*pick)(const GroupSummary&)) {
        std::vector<std::vector<std::string>> t;
        std::vector<std::string> head = {"Manipulation"};
        for (const auto& c : cols) head.push_back(c.detector + " (" + std::string(to_string(c.mode)) + ")");
        t.push_back(head);
        for (const auto& r : rows) {
            std::vector<std::string> line = {r.name};
            for (const auto& c : cols) {
                const auto it = cell.find({r.name, c});
                line.push_back(it == cell.end() ? "-" : pick(*it->second).cell());
            }
            t.push_back(std::move(line));
        }
        std::vector<std::size_t> width(head.size(), 0);
        for (const auto& line : t)
            for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], columns(line[i]));
        out << title << '\n';
        for (std::size_t n = 0; n < t.size(); ++n) {
            std::string text;
            for (std::size_t i = 0; i < t[n].size(); ++i) text += (i ? "  " : "") + pad(t[n][i], width[i]);
            while (!text.empty() && text.back() == ' ') text.pop_back();
            out << text << '\n';
            if (n == 0) {
                std::size_t total = 0;
                for (auto w : width) total += w;
                out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
            }
        }
    };
    table("Detection (squatted: N_tp/N_p, benign: N_fp/N_b)", detection_ratio);
    out << '\n';
    table("Identification (squatted: I_tp/N_tp, benign: I_fp/N_fp)", identification_ratio);
    return out.str();
}

std::string detection_svg(const std::vector<GroupSummary>& groups) {
    std::set<Column> cols;
    std::set<RowKey> rows;
    for (const auto& g : groups) {
        cols.insert({g.key.detector, g.key.url_mode});
        rows.insert({manipulation_rank(g.key.manipulation), g.key.manipulation});
    }
    const double bar = 12, gap = 18, plot_h = 200, left = 50, top = 20, bottom = 110;
    const double group_w = bar * static_cast<double>(cols.size()) + gap;
    const double width = left + group_w * static_cast<double>(rows.size()) + 20 + 180;
    const double height = top + plot_h + bottom;
    static const char* palette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7"};

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed2(width) << "\" height=\"" << fixed2(height)
        << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    out << "<line x1=\"" << fixed2(left) << "\" y1=\"" << fixed2(top) << "\" x2=\"" << fixed2(left) << "\" y2=\""
        << fixed2(top + plot_h) << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double y = top + plot_h - plot_h * tick / 4.0;
        out << "<text x=\"" << fixed2(left - 4) << "\" y=\"" << fixed2(y + 3) << "\" text-anchor=\"end\">"
            << tick * 25 << "%</text>\n";
    }
    std::size_t ri = 0;
    for (const auto& r : rows) {
        const double x0 = left + 8 + group_w * static_cast<double>(ri);
        std::size_t ci = 0;
        for (const auto& c : cols) {
            for (const auto& g : groups) {
                if (g.key.detector != c.detector || g.key.url_mode != c.mode || g.key.manipulation != r.name) continue;
                const double v = detection_ratio(g).value().value_or(0.0);
                const double h = plot_h * v;
                out << "<rect x=\"" << fixed2(x0 + bar * static_cast<double>(ci)) << "\" y=\"" << fixed2(top + plot_h - h)
                    << "\" width=\"" << fixed2(bar - 1) << "\" height=\"" << fixed2(h) << "\" fill=\""
                    << palette[ci % 8] << "\"><title>" << xml_escape(c.detector) << ' ' << to_string(c.mode) << ' '
                    << xml_escape(r.name) << ": " << xml_escape(detection_ratio(g).cell()) << "</title></rect>\n";
            }
            ++ci;
        }
        const double lx = x0 + bar * static_cast<double>(cols.size()) / 2, ly = top + plot_h + 8;
        out << "<text x=\"" << fixed2(lx) << "\" y=\"" << fixed2(ly) << "\" transform=\"rotate(60 " << fixed2(lx) << ' '
            << fixed2(ly) << ")\">" << xml_escape(r.name) << "</text>\n";
        ++ri;
    }
    std::size_t ci = 0;
    const double lx = left + group_w * static_cast<double>(rows.size()) + 20;
    for (const auto& c : cols) {
        const double y = top + 14.0 * static_cast<double>(ci);
        out << "<rect x=\"" << fixed2(lx) << "\" y=\"" << fixed2(y) << "\" width=\"10\" height=\"10\" fill=\""
            << palette[ci % 8] << "\"/>\n";
        out << "<text x=\"" << fixed2(lx + 14) << "\" y=\"" << fixed2(y + 9) << "\">" << xml_escape(c.detector) << " ("
            << to_string(c.mode) << ")</text>\n";
        ++ci;
    }
    out << "</svg>\n";
    return out.str();
}

void report(const std::vector<EvalRecord>& records, const std::filesystem::path& out_dir) {
    if (records.empty()) throw ValidationError("no records to report");
    const auto groups = summarize(records);
    std::filesystem::create_directories(out_dir);
    auto write = [&](const char* name, const std::string& text) {
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw IOError("cannot write " + (out_dir / name).string());
        f << text;
    };
    write("summary.csv", summary_csv(groups));
    write("grid.txt", text_grid(groups));
    write("detection.svg", detection_svg(groups));
}

}  // namespace phishbench
