// phishbench: command-line driver for the robustness benchmark pipeline.
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "phishbench/cluster.hpp"
#include "phishbench/core.hpp"
#include "phishbench/detect.hpp"
#include "phishbench/errors.hpp"
#include "phishbench/manip.hpp"
#include "phishbench/metrics.hpp"
#include "phishbench/perturb.hpp"
#include "phishbench/png_io.hpp"
#include "phishbench/synth.hpp"
#include "phishbench/text.hpp"
#include "phishbench/urltools.hpp"

#ifndef PHISHBENCH_VERSION
#define PHISHBENCH_VERSION "dev"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace phishbench;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitUsage = 64;

// Keys holding filesystem paths; made absolute before the config is printed
// so the replay file does not depend on the working directory.
const std::set<std::string> kPathKeys = {"manifest", "refs",  "extended_refs", "originals", "out",
                                         "plan",     "detectors_config", "records"};

json default_config() {
    return json{
        {"manifest", nullptr},
        {"refs", nullptr},
        {"refs_variant", "base"},
        {"extended_refs", nullptr},
        {"out", nullptr},
        {"plan", nullptr},
        {"detectors_config", nullptr},
        {"detectors", json::array({"emd", "phishzoo"})},
        {"adapter_cmd", json::object()},
        {"score_semantics", json::object()},
        {"seed", nullptr},
        {"workers", 1},
        {"url_mode", "both"},
        {"stopwords", false},
        {"brand_token_scan", false},
        {"perturbation", "attack=FGSM;epsilon=8/255"},
        {"cluster", {{"max_dist", 10}, {"min_size", 20}, {"per_cluster", 1000}}},
        {"synth", {{"brands", 110}, {"samples_per_brand", 1}}},
        {"records", json::array()},
        {"domain", nullptr},
        {"typo_ops", "all"},
    };
}

void merge(json& base, const json& over) {
    for (const auto& [k, v] : over.items()) {
        if (base.contains(k) && base[k].is_object() && v.is_object())
            merge(base[k], v);
        else
            base[k] = v;
    }
}

void absolutize(json& cfg) {
    for (const auto& key : kPathKeys) {
        if (!cfg.contains(key)) continue;
        auto& v = cfg[key];
        if (v.is_string() && !v.get<std::string>().empty())
            v = fs::absolute(v.get<std::string>()).lexically_normal().string();
        else if (v.is_array())
            for (auto& e : v)
                if (e.is_string()) e = fs::absolute(e.get<std::string>()).lexically_normal().string();
    }
}

// Flag values are recorded only when the flag was given, so they override the
// config file but not the other way round.
class Flags {
public:
    template <class T>
    CLI::Option* option(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
        auto store = std::make_shared<T>();
        CLI::Option* opt = app->add_option(name, *store, help);
        appliers_.push_back([opt, store, key](json& j) {
            if (opt->count()) j[json::json_pointer("/" + key)] = *store;
        });
        return opt;
    }
    CLI::Option* flag(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
        auto store = std::make_shared<bool>(false);
        CLI::Option* opt = app->add_flag(name, *store, help);
        appliers_.push_back([opt, key](json& j) {
            if (opt->count()) j[json::json_pointer("/" + key)] = true;
        });
        return opt;
    }
    // Repeated `name=value` pairs into an object.
    CLI::Option* pairs(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
        auto store = std::make_shared<std::vector<std::string>>();
        CLI::Option* opt = app->add_option(name, *store, help);
        appliers_.push_back([opt, store, key](json& j) {
            if (!opt->count()) return;
            for (const auto& kv : *store) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ValidationError(key + " expects name=value, got '" + kv + "'");
                j[key][kv.substr(0, eq)] = kv.substr(eq + 1);
            }
        });
        return opt;
    }
    void apply(json& j) const {
        for (const auto& f : appliers_) f(j);
    }

private:
    std::vector<std::function<void(json&)>> appliers_;
};

std::string str(const json& cfg, const std::string& key) {
    if (!cfg.contains(key) || cfg[key].is_null()) throw ValidationError("missing required setting '" + key + "'");
    return cfg[key].get<std::string>();
}

fs::path existing(const json& cfg, const std::string& key) {
    const fs::path p = str(cfg, key);
    if (!fs::exists(p)) throw ValidationError(key + " path does not exist: " + p.string());
    return p;
}

std::vector<fs::path> existing_list(const json& cfg, const std::string& key) {
    std::vector<fs::path> out;
    const auto& v = cfg.contains(key) ? cfg[key] : json();
    if (v.is_string()) {
        out.push_back(v.get<std::string>());
    } else if (v.is_array()) {
        for (const auto& e : v) out.push_back(e.get<std::string>());
    }
    if (out.empty()) throw ValidationError("missing required setting '" + key + "'");
    for (const auto& p : out)
        if (!fs::exists(p)) throw ValidationError(key + " path does not exist: " + p.string());
    return out;
}

fs::path out_dir(const json& cfg) {
    const fs::path p = str(cfg, "out");
    fs::create_directories(p);
    return p;
}

std::uint64_t resolve_seed(json& cfg, const DatasetManifest* manifest) {
    if (!cfg["seed"].is_null()) return cfg["seed"].get<std::uint64_t>();
    if (manifest && manifest->seed_recorded) {
        cfg["seed"] = manifest->seed;
        return manifest->seed;
    }
    throw ValidationError("a seed is required: pass --seed or record '# seed:' in the manifest");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IOError("cannot write " + path.string());
    f << text;
    if (!f) throw IOError("failed writing " + path.string());
}

void write_replay(const fs::path& dir, const std::string& command, const json& cfg) {
    json r;
    r["tool"] = "phishbench";
    r["version"] = PHISHBENCH_VERSION;
    r["command"] = command;
    r["config"] = cfg;
    write_text(dir / "replay.json", r.dump(2) + "\n");
}

// Sidecars written by manipulate/perturb carry the metadata the manifest
// format has no column for.
void attach_sidecars(DatasetManifest& m) {
    const fs::path dir = m.base_dir / "sidecars";
    if (!fs::is_directory(dir)) return;
    for (auto& s : m.entries) {
        const fs::path p = dir / (s.id + ".json");
        if (!fs::exists(p)) continue;
        json j;
        try {
            j = json::parse(read_file(p.string()));
        } catch (const json::exception& e) {
            throw ParseError("sidecar " + p.string() + ": " + e.what());
        }
        if (j.contains("metadata"))
            for (const auto& [k, v] : j["metadata"].items()) s.metadata[k] = v.get<std::string>();
    }
}

DatasetManifest load_with_sidecars(const fs::path& path) {
    DatasetManifest m = load_manifest(path);
    attach_sidecars(m);
    return m;
}

ReferenceList load_refs(const json& cfg) {
    return load_reference_list(existing(cfg, "refs"), parse_reference_variant(str(cfg, "refs_variant")));
}

json sidecar_json(const ScreenshotSample& s, const std::vector<Rect>& affected) {
    json j;
    j["id"] = s.id;
    j["metadata"] = json::object();
    for (const auto& [k, v] : s.metadata) j["metadata"][k] = v;
    j["affected"] = json::array();
    for (const auto& r : affected) j["affected"].push_back({r.x, r.y, r.w, r.h});
    return j;
}

void save_variants(const std::vector<ScreenshotSample>& variants, const std::vector<std::vector<Rect>>& affected,
                   const fs::path& out, std::uint64_t seed, const std::string& provenance) {
    fs::create_directories(out / "images");
    fs::create_directories(out / "sidecars");
    DatasetManifest m;
    m.seed = seed;
    m.provenance = provenance;
    m.base_dir = fs::absolute(out).lexically_normal();
    for (std::size_t i = 0; i < variants.size(); ++i) {
        ScreenshotSample s = variants[i];
        s.image_path = m.base_dir / "images" / (s.id + ".png");
        write_png(s.image_path, s.image);
        write_text(out / "sidecars" / (s.id + ".json"), sidecar_json(s, affected[i]).dump(2) + "\n");
        m.entries.push_back(std::move(s));
    }
    save_manifest(m, out / "manifest.tsv");
}

// ---------------------------------------------------------------------------

int cmd_synth(json& cfg) {
    const fs::path out = out_dir(cfg);
    SynthOptions o;
    o.brands = cfg["synth"]["brands"].get<std::size_t>();
    o.samples_per_brand = cfg["synth"]["samples_per_brand"].get<std::size_t>();
    o.seed = resolve_seed(cfg, nullptr);
    const SynthPaths p = write_synthetic_corpus(o, out);
    write_replay(out, "synth", cfg);
    std::cout << "manifest\t" << p.manifest.string() << "\nrefs\t" << p.refs.string() << "\nplan\t" << p.plan.string()
              << '\n';
    return 0;
}

int cmd_ingest(json& cfg) {
    DatasetManifest m = load_manifest(existing(cfg, "manifest"));
    const fs::path out = out_dir(cfg);
    std::set<std::string> brands;
    std::size_t with_region = 0, with_html = 0;
    for (const auto& s : m.entries) {
        if (s.brand) brands.insert(*s.brand);
        with_region += s.logo_region.has_value();
        with_html += s.html_path.has_value();
    }
    m.base_dir = fs::absolute(out).lexically_normal();
    save_manifest(m, out / "manifest.tsv");
    std::string summary = "samples\t" + std::to_string(m.entries.size()) + "\nbrands\t" + std::to_string(brands.size()) +
                          "\nlogo_regions\t" + std::to_string(with_region) + "\nhtml\t" + std::to_string(with_html) +
                          "\nseed\t" + (m.seed_recorded ? std::to_string(m.seed) : "-") + "\n";
    write_text(out / "ingest_summary.tsv", summary);
    write_replay(out, "ingest", cfg);
    std::cout << summary;
    return 0;
}

int cmd_cluster(json& cfg) {
    DatasetManifest m = load_manifest(existing(cfg, "manifest"));
    const fs::path out = out_dir(cfg);
    const std::uint64_t seed = resolve_seed(cfg, &m);
    const auto& c = cfg["cluster"];
    std::map<std::string, PerceptualHash> hashes;
    for (const auto& s : m.entries) hashes[s.id] = perceptual_hash(s.image);
    const ClusterSet all = cluster_by_similarity(hashes, c["max_dist"].get<int>());
    const FilterResult filtered = filter_clusters(all, c["min_size"].get<std::size_t>());
    const auto picked = sample_per_cluster(filtered.kept, c["per_cluster"].get<std::size_t>(), seed);

    std::map<std::string, std::string> cluster_of;
    for (const auto& cl : filtered.kept.clusters)
        for (const auto& id : cl.members) cluster_of[id] = cl.id;
    DatasetManifest sampled;
    sampled.seed = seed;
    sampled.provenance = m.provenance.empty() ? "clustered sample" : m.provenance + "; clustered sample";
    sampled.base_dir = fs::absolute(out).lexically_normal();
    for (const auto& id : picked) {
        ScreenshotSample s = *m.find(id);
        s.cluster_id = cluster_of.at(id);
        sampled.entries.push_back(std::move(s));
    }
    write_cluster_report(all, out / "clusters.tsv");
    write_text(out / "dropped.txt", join(filtered.dropped_members, "\n") + (filtered.dropped_members.empty() ? "" : "\n"));
    save_manifest(sampled, out / "manifest.tsv");
    write_replay(out, "cluster", cfg);
    std::cout << "clusters\t" << all.clusters.size() << "\nkept\t" << filtered.kept.clusters.size() << "\nsampled\t"
              << sampled.entries.size() << '\n';
    return 0;
}

int cmd_refs(json& cfg) {
    const ReferenceList base = load_refs(cfg);
    const fs::path out = out_dir(cfg);
    std::string table = "variant\tbrand\tlogos\tscreenshots\tdomains\n";
    auto rows = [&](const ReferenceList& r) {
        for (const auto& [name, b] : r.brands)
            table += std::string(to_string(r.variant)) + "\t" + name + "\t" + std::to_string(b.logos.size()) + "\t" +
                     std::to_string(b.screenshots.size()) + "\t" + std::to_string(b.domains.size()) + "\n";
        std::cout << to_string(r.variant) << ": " << r.brands.size() << " brands, " << r.logo_count() << " logos, "
                  << r.screenshot_count() << " screenshots\n";
    };
    rows(base);
    if (!cfg["extended_refs"].is_null()) {
        const ReferenceList ext = load_reference_list(existing(cfg, "extended_refs"), ReferenceVariant::extended);
        check_superset(base, ext);
        rows(ext);
    }
    write_text(out / "refs_summary.tsv", table);
    write_replay(out, "refs", cfg);
    return 0;
}

int cmd_manipulate(json& cfg) {
    const DatasetManifest m = load_manifest(existing(cfg, "manifest"));
    const ReferenceList refs = load_refs(cfg);
    const auto plan = read_plan(existing(cfg, "plan"));
    const fs::path out = out_dir(cfg);
    const std::uint64_t seed = resolve_seed(cfg, &m);

    std::vector<ScreenshotSample> variants;
    std::vector<std::vector<Rect>> affected;
    std::set<std::string> seen;
    for (const auto& line : plan) {
        const ManipulationSpec spec = ManipulationSpec::parse(line.kind, line.params);
        std::vector<const ScreenshotSample*> targets;
        if (line.sample_id == "*") {
            for (const auto& s : m.entries) targets.push_back(&s);
        } else {
            const ScreenshotSample* s = m.find(line.sample_id);
            if (!s) throw ValidationError("plan names unknown sample '" + line.sample_id + "'");
            targets.push_back(s);
        }
        for (const auto* s : targets) {
            const std::string vid = s->id + "@" + std::string(to_string(spec.kind));
            if (!seen.insert(vid).second) throw ValidationError("plan produces '" + vid + "' twice");
            SeedStream rng(seed, "manip", vid);
            ManipulationResult r = apply_manipulation(*s, spec, refs, rng);
            variants.push_back(std::move(r.sample));
            affected.push_back(std::move(r.affected));
        }
    }
    save_variants(variants, affected, out, seed, "manipulated variants of " + str(cfg, "manifest"));
    write_replay(out, "manipulate", cfg);
    std::cout << "variants\t" << variants.size() << '\n';
    return 0;
}

int cmd_perturb(json& cfg) {
    const DatasetManifest m = load_manifest(existing(cfg, "manifest"));
    const ReferenceList refs = load_refs(cfg);
    const PerturbationConfig pc = PerturbationConfig::parse(str(cfg, "perturbation"));
    const fs::path out = out_dir(cfg);
    const std::uint64_t seed = resolve_seed(cfg, &m);
    const auto scorer = builtin_scorer();

    std::vector<ScreenshotSample> variants;
    std::vector<std::vector<Rect>> affected;
    std::string stats = "id\treference\tinitial_score\tfinal_score\titerations\tlinf\tl2\n";
    for (const auto& s : m.entries) {
        const std::string vid = s.id + "@" + std::string(to_string(pc.attack));
        SeedStream rng(seed, "perturb", vid);
        PerturbedSample p = perturb_sample(s, refs, *scorer, pc, rng);
        stats += p.sample.id + "\t" + p.reference + "\t" + format_real(p.attack.initial_score) + "\t" +
                 format_real(p.attack.final_score) + "\t" + std::to_string(p.attack.iterations) + "\t" +
                 format_real(p.attack.linf) + "\t" + format_real(p.attack.l2) + "\n";
        affected.push_back({s.logo_region->rect()});
        variants.push_back(std::move(p.sample));
    }
    save_variants(variants, affected, out, seed, "perturbed variants of " + str(cfg, "manifest"));
    write_text(out / "attacks.tsv", stats);
    write_replay(out, "perturb", cfg);
    std::cout << "variants\t" << variants.size() << '\n';
    return 0;
}

int cmd_evaluate(json& cfg) {
    std::vector<ScreenshotSample> samples;
    std::set<std::string> ids;
    for (const auto& path : existing_list(cfg, "manifest")) {
        DatasetManifest m = load_with_sidecars(path);
        for (auto& s : m.entries) {
            if (!ids.insert(s.id).second) throw ValidationError("sample '" + s.id + "' appears in two manifests");
            samples.push_back(std::move(s));
        }
    }
    std::vector<ScreenshotSample> originals;
    if (cfg.contains("originals") && !cfg["originals"].is_null())
        originals = load_manifest(existing(cfg, "originals")).entries;
    const ReferenceList refs = load_refs(cfg);
    const fs::path out = out_dir(cfg);

    auto config = cfg["detectors_config"].is_null() ? default_detector_config()
                                                    : load_detector_config(existing(cfg, "detectors_config"));
    for (const auto& [id, v] : cfg["score_semantics"].items()) {
        if (!config.contains(id)) throw ConfigError("score_semantics names unknown detector '" + id + "'");
        config[id].score_semantics = parse_score_semantics(v.get<std::string>());
    }
    for (const auto& [id, v] : cfg["adapter_cmd"].items()) {
        if (!config.contains(id)) throw ConfigError("adapter_cmd names unknown detector '" + id + "'");
        config[id].adapter_cmd = v.get<std::string>();
    }
    std::vector<DetectorEntry> detectors;
    for (const auto& id : cfg["detectors"]) {
        const auto it = config.find(id.get<std::string>());
        if (it == config.end()) throw ConfigError("unknown detector '" + id.get<std::string>() + "'");
        it->second.validate();
        detectors.push_back(it->second);
    }

    std::vector<UrlMode> modes;
    const std::string mode = str(cfg, "url_mode");
    if (mode == "both")
        modes = {UrlMode::benign, UrlMode::squatted};
    else
        modes = {parse_url_mode(mode)};

    EvalOptions opts;
    opts.workers = cfg["workers"].get<std::size_t>();
    opts.originals = originals.empty() ? nullptr : &originals;
    opts.domain_check.brand_token_scan = cfg["brand_token_scan"].get<bool>();
    opts.keywords.remove_stopwords = cfg["stopwords"].get<bool>();
    std::size_t last_decile = 0;
    opts.progress = [&](std::size_t done, std::size_t total) {
        const std::size_t decile = done * 10 / total;
        if (decile != last_decile || done == total) {
            last_decile = decile;
            std::cerr << "evaluate: " << done << "/" << total << '\n';
        }
    };
    if (std::find(modes.begin(), modes.end(), UrlMode::squatted) != modes.end()) {
        opts.squat_urls = build_squat_map(originals.empty() ? samples : originals);
        if (!originals.empty()) {
            const auto more = build_squat_map(samples);
            opts.squat_urls.insert(more.begin(), more.end());
        }
        std::string text;
        for (const auto& [id, url] : opts.squat_urls) text += id + "\t" + url + "\n";
        write_text(out / "squats.tsv", text);
    }

    std::vector<EvalRecord> records;
    std::string errors;
    for (const auto m : modes) {
        last_decile = 0;
        EvalResult r = evaluate(detectors, samples, refs, m, opts);
        records.insert(records.end(), r.records.begin(), r.records.end());
        for (const auto& e : r.errors) errors += e.sample_id + "\t" + e.detector_id + "\t" + std::string(to_string(m)) +
                                                 "\t" + e.message + "\n";
    }
    write_records(records, out / "records.tsv");
    write_text(out / "errors.tsv", errors);
    write_replay(out, "evaluate", cfg);
    std::cout << "records\t" << records.size() << "\nerrors\t"
              << std::count(errors.begin(), errors.end(), '\n') << '\n';
    return 0;
}

int cmd_report(json& cfg) {
    std::vector<EvalRecord> records;
    for (const auto& p : existing_list(cfg, "records")) {
        auto r = read_records(p);
        records.insert(records.end(), r.begin(), r.end());
    }
    if (records.empty()) throw ValidationError("no records to report");
    const fs::path out = out_dir(cfg);
    report(records, out);
    write_replay(out, "report", cfg);
    std::cout << read_file((out / "grid.txt").string());
    return 0;
}

int cmd_squat(json& cfg) {
    TyposquatOptions o;
    o.ops = parse_typo_ops(str(cfg, "typo_ops"));
    const auto squats = generate_typosquats(str(cfg, "domain"), o);
    std::string text;
    for (const auto& s : squats) text += s + "\n";
    if (!cfg["out"].is_null()) {
        const fs::path out = out_dir(cfg);
        write_text(out / "squats.txt", text);
        write_replay(out, "squat", cfg);
    }
    std::cout << text;
    return 0;
}

using Handler = int (*)(json&);

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h = {
        {"synth", cmd_synth},     {"ingest", cmd_ingest},   {"cluster", cmd_cluster},
        {"refs", cmd_refs},       {"manipulate", cmd_manipulate}, {"perturb", cmd_perturb},
        {"evaluate", cmd_evaluate}, {"report", cmd_report}, {"squat", cmd_squat},
    };
    return h;
}

int run(const std::string& command, json cfg) {
    absolutize(cfg);
    std::cerr << "phishbench " << command << ": effective config\n" << cfg.dump(2) << '\n';
    try {
        return handlers().at(command)(cfg);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const AssetError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const RegionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robustness benchmark for visual-similarity phishing detectors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", PHISHBENCH_VERSION);

    std::map<std::string, std::pair<CLI::App*, Flags>> subs;
    std::map<std::string, std::string> config_files;
    auto sub = [&](const std::string& name, const std::string& help) -> Flags& {
        CLI::App* s = app.add_subcommand(name, help);
        auto& entry = subs[name];
        entry.first = s;
        s->add_option("--config", config_files[name], "JSON config file (flags take precedence)")->check(CLI::ExistingFile);
        return entry.second;
    };
    auto seed = [](CLI::App* s, Flags& f) { f.option<std::uint64_t>(s, "--seed", "seed", "run seed"); };
    auto out = [](CLI::App* s, Flags& f) { f.option<std::string>(s, "--out,-o", "out", "output directory"); };

    {
        Flags& f = sub("synth", "write a synthetic corpus (reference list, samples, plan)");
        auto* s = subs["synth"].first;
        out(s, f);
        seed(s, f);
        f.option<std::size_t>(s, "--brands", "synth/brands", "number of brands");
        f.option<std::size_t>(s, "--samples-per-brand", "synth/samples_per_brand", "samples per brand");
    }
    {
        Flags& f = sub("ingest", "validate a manifest and write a normalised copy");
        auto* s = subs["ingest"].first;
        f.option<std::string>(s, "--manifest", "manifest", "input manifest");
        out(s, f);
    }
    {
        Flags& f = sub("cluster", "perceptual-hash clustering, size filter and per-cluster sampling");
        auto* s = subs["cluster"].first;
        f.option<std::string>(s, "--manifest", "manifest", "input manifest");
        out(s, f);
        seed(s, f);
        f.option<int>(s, "--max-dist", "cluster/max_dist", "Hamming distance for an edge (bits)");
        f.option<std::size_t>(s, "--min-size", "cluster/min_size", "smallest cluster kept");
        f.option<std::size_t>(s, "--per-cluster", "cluster/per_cluster", "samples drawn per cluster");
    }
    {
        Flags& f = sub("refs", "load and check reference lists");
        auto* s = subs["refs"].first;
        f.option<std::string>(s, "--refs", "refs", "reference list directory");
        f.option<std::string>(s, "--refs-variant", "refs_variant", "base or extended");
        f.option<std::string>(s, "--extended-refs", "extended_refs", "extended list checked as a superset");
        out(s, f);
    }
    {
        Flags& f = sub("manipulate", "apply a manipulation plan");
        auto* s = subs["manipulate"].first;
        f.option<std::string>(s, "--manifest", "manifest", "input manifest");
        f.option<std::string>(s, "--refs", "refs", "reference list directory");
        f.option<std::string>(s, "--refs-variant", "refs_variant", "base or extended");
        f.option<std::string>(s, "--plan", "plan", "plan file: sample_id<TAB>kind<TAB>params");
        out(s, f);
        seed(s, f);
    }
    {
        Flags& f = sub("perturb", "gradient perturbation of every sample's logo");
        auto* s = subs["perturb"].first;
        f.option<std::string>(s, "--manifest", "manifest", "input manifest");
        f.option<std::string>(s, "--refs", "refs", "reference list directory");
        f.option<std::string>(s, "--refs-variant", "refs_variant", "base or extended");
        f.option<std::string>(s, "--params", "perturbation", "e.g. attack=PGD;epsilon=8/255;steps=40");
        out(s, f);
        seed(s, f);
    }
    {
        Flags& f = sub("evaluate", "run detectors and write per-sample records");
        auto* s = subs["evaluate"].first;
        f.option<std::vector<std::string>>(s, "--manifest", "manifest", "input manifests (repeatable)");
        f.option<std::string>(s, "--originals", "originals", "originals for quality metrics");
        f.option<std::string>(s, "--refs", "refs", "reference list directory");
        f.option<std::string>(s, "--refs-variant", "refs_variant", "base or extended");
        f.option<std::string>(s, "--detectors-config", "detectors_config", "detector config JSON");
        f.option<std::vector<std::string>>(s, "--detectors", "detectors", "detector ids")->delimiter(',');
        f.pairs(s, "--score-semantics", "score_semantics", "id=similarity_ge|distance_le (repeatable)");
        f.pairs(s, "--adapter-cmd", "adapter_cmd", "id=command (repeatable)");
        f.option<std::string>(s, "--url-mode", "url_mode", "benign, squatted or both")
            ->check(CLI::IsMember({"benign", "squatted", "both"}));
        f.option<std::size_t>(s, "--workers", "workers", "worker threads");
        f.flag(s, "--stopwords", "stopwords", "remove stopwords from keyword profiles");
        f.flag(s, "--brand-token-scan", "brand_token_scan", "accept hosts carrying a brand domain label");
        out(s, f);
    }
    {
        Flags& f = sub("report", "summarise records into CSV, grid and chart");
        auto* s = subs["report"].first;
        f.option<std::vector<std::string>>(s, "--records", "records", "records files (repeatable)");
        out(s, f);
    }
    {
        Flags& f = sub("squat", "list typosquats of a domain");
        auto* s = subs["squat"].first;
        f.option<std::string>(s, "--domain", "domain", "registrable domain");
        f.option<std::string>(s, "--ops", "typo_ops", "comma list of operations or 'all'");
        out(s, f);
    }
    std::string replay_file;
    CLI::App* replay = app.add_subcommand("replay", "rerun a command from its replay.json");
    replay->add_option("file", replay_file, "replay file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (replay->parsed()) {
            const json r = json::parse(read_file(replay_file));
            json cfg = default_config();
            merge(cfg, r.at("config"));
            const std::string command = r.at("command").get<std::string>();
            if (!handlers().contains(command)) throw ValidationError("replay names unknown command '" + command + "'");
            return run(command, cfg);
        }
        for (auto& [name, entry] : subs) {
            if (!entry.first->parsed()) continue;
            json cfg = default_config();
            if (!config_files[name].empty()) merge(cfg, json::parse(read_file(config_files[name])));
            entry.second.apply(cfg);
            return run(name, cfg);
        }
    } catch (const json::exception& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
