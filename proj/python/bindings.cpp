#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "phishbench/cluster.hpp"
#include "phishbench/detect.hpp"
#include "phishbench/manip.hpp"
#include "phishbench/metrics.hpp"
#include "phishbench/perturb.hpp"
#include "phishbench/png_io.hpp"
#include "phishbench/synth.hpp"
#include "phishbench/urltools.hpp"

namespace py = pybind11;
using namespace phishbench;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

RgbImage to_image(const U8Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw ShapeError("expected an HxWx3 uint8 array");
    RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::memcpy(img.bytes().data(), a.data(), img.bytes().size());
    return img;
}

U8Array to_array(const RgbImage& img) {
    U8Array out({static_cast<py::ssize_t>(img.height()), static_cast<py::ssize_t>(img.width()), py::ssize_t{3}});
    std::memcpy(out.mutable_data(), img.bytes().data(), img.bytes().size());
    return out;
}

FloatImage to_float_image(const F64Array& a) {
    if (a.ndim() != 3) throw ShapeError("expected an HxWxC float array");
    FloatImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), static_cast<int>(a.shape(2)));
    std::memcpy(img.data.data(), a.data(), img.data.size() * sizeof(double));
    return img;
}

F64Array to_float_array(const FloatImage& img) {
    F64Array out({static_cast<py::ssize_t>(img.height), static_cast<py::ssize_t>(img.width),
                  static_cast<py::ssize_t>(img.channels)});
    std::memcpy(out.mutable_data(), img.data.data(), img.data.size() * sizeof(double));
    return out;
}

py::object ratio_value(const Ratio& r) {
    if (const auto v = r.value()) return py::float_(*v);
    return py::none();
}

}  // namespace

PYBIND11_MODULE(_phishbench, m) {
    m.doc() = "Robustness benchmark for visual-similarity phishing detectors";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());

    m.def(
        "compute_rates",
        [](std::uint64_t n_p, std::uint64_t n_tp, std::uint64_t i_tp, std::uint64_t n_b, std::uint64_t n_fp,
           std::uint64_t i_fp) {
            const auto r = compute_rates(RateCounts{n_p, n_tp, i_tp, n_b, n_fp, i_fp});
            py::dict d;
            d["tpr"] = ratio_value(r.tpr);
            d["ident_rate"] = ratio_value(r.ident_rate);
            d["ident_precision"] = ratio_value(r.ident_precision);
            d["fpr"] = ratio_value(r.fpr);
            d["false_ident"] = ratio_value(r.false_ident);
            d["overall_false_brand"] = ratio_value(r.overall_false_brand);
            d["tpr_cell"] = r.tpr.cell();
            d["fpr_cell"] = r.fpr.cell();
            return d;
        },
        py::arg("n_p") = 0, py::arg("n_tp") = 0, py::arg("i_tp") = 0, py::arg("n_b") = 0, py::arg("n_fp") = 0,
        py::arg("i_fp") = 0);

    m.def(
        "parse_registrable",
        [](const std::string& url) {
            const auto p = parse_registrable(url);
            py::dict d;
            d["hostname"] = p.hostname;
            d["registrable"] = p.registrable;
            d["sld"] = p.sld;
            d["suffix"] = p.suffix;
            d["ip_literal"] = p.ip_literal;
            return d;
        },
        py::arg("url"));

    m.def(
        "typosquats",
        [](const std::string& domain, const std::string& ops) {
            TyposquatOptions o;
            o.ops = parse_typo_ops(ops);
            const auto s = generate_typosquats(domain, o);
            return std::vector<std::string>(s.begin(), s.end());
        },
        py::arg("domain"), py::arg("ops") = "all");

    m.def(
        "verify_brand_domain",
        [](const std::string& url, const std::vector<std::string>& domains, bool brand_token_scan) {
            ReferenceList refs;
            BrandReference b;
            b.brand = "brand";
            b.domains = domains;
            refs.brands["brand"] = b;
            DomainCheckOptions o;
            o.brand_token_scan = brand_token_scan;
            return verify_brand_domain("brand", url, refs, SuffixTable::builtin(), o);
        },
        py::arg("url"), py::arg("domains"), py::arg("brand_token_scan") = false);

    m.def("read_png", [](const std::filesystem::path& p) { return to_array(read_png_rgb(p)); }, py::arg("path"));
    m.def(
        "write_png", [](const std::filesystem::path& p, const U8Array& a) { write_png(p, to_image(a)); },
        py::arg("path"), py::arg("image"));

    m.def("ssim", [](const U8Array& a, const U8Array& b) { return ssim(to_image(a), to_image(b)); });
    m.def("psnr", [](const U8Array& a, const U8Array& b) { return psnr(to_image(a), to_image(b)); });
    m.def("phash", [](const U8Array& a) { return perceptual_hash(to_image(a)).bits; });

    m.def(
        "emd_similarity",
        [](const U8Array& a, const U8Array& b) {
            return 1.0 - emd_distance(emd_signature(to_image(a)), emd_signature(to_image(b)));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "manipulate",
        [](const U8Array& image, std::tuple<int, int, int, int> region, const std::string& kind,
           const std::string& params, std::uint64_t seed) {
            ScreenshotSample s;
            s.id = "py";
            s.image = to_image(image);
            const auto [x, y, w, h] = region;
            s.logo_region = LogoRegion{x, y, w, h, 1.0};
            SeedStream rng(seed, "manip", "py@" + kind);
            const auto r = apply_manipulation(s, ManipulationSpec::parse(kind, params), ReferenceList{}, rng);
            std::vector<std::tuple<int, int, int, int>> affected;
            for (const auto& a : r.affected) affected.emplace_back(a.x, a.y, a.w, a.h);
            return py::make_tuple(to_array(r.sample.image), affected);
        },
        py::arg("image"), py::arg("region"), py::arg("kind"), py::arg("params") = "", py::arg("seed") = 0);

    m.def(
        "attack",
        [](const F64Array& logo, const F64Array& reference, const std::string& config, std::uint64_t seed) {
            const auto scorer = builtin_scorer();
            SeedStream rng(seed, "perturb", "py");
            const auto r =
                run_attack(to_float_image(logo), to_float_image(reference), *scorer, PerturbationConfig::parse(config), rng);
            py::dict d;
            d["logo"] = to_float_array(r.logo);
            d["initial_score"] = r.initial_score;
            d["final_score"] = r.final_score;
            d["linf"] = r.linf;
            d["l2"] = r.l2;
            return d;
        },
        py::arg("logo"), py::arg("reference"), py::arg("config") = "attack=FGSM;epsilon=8/255", py::arg("seed") = 0);

    m.def(
        "synth_corpus",
        [](const std::filesystem::path& dir, std::size_t brands, std::uint64_t seed) {
            SynthOptions o;
            o.brands = brands;
            o.seed = seed;
            const auto p = write_synthetic_corpus(o, dir);
            py::dict d;
            d["manifest"] = p.manifest;
            d["refs"] = p.refs;
            d["plan"] = p.plan;
            return d;
        },
        py::arg("dir"), py::arg("brands") = 110, py::arg("seed") = 0);

    m.def(
        "report",
        [](const std::filesystem::path& records, const std::filesystem::path& out) { report(read_records(records), out); },
        py::arg("records"), py::arg("out"));
}
