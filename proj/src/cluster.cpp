#include "phishbench/cluster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "phishbench/text.hpp"

namespace phishbench {
namespace {

constexpr int kSide = 32;

// Zig-zag traversal of the top-left 12x12 block; enough to collect 64 AC terms.
std::vector<std::pair<int, int>> zigzag_ac(std::size_t count) {
    std::vector<std::pair<int, int>> order;
    for (int s = 1; order.size() < count; ++s) {
        for (int i = 0; i <= s && order.size() < count; ++i) {
            const int u = (s % 2 == 0) ? s - i : i;
            const int v = s - u;
            order.emplace_back(u, v);
        }
    }
    return order;
}

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // Keep the smaller index (= lexicographically smaller id) as root.
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

PerceptualHash perceptual_hash(const RgbImage& image) {
    const auto gray = luma(image);
    const auto small = area_resample(gray, image.width(), image.height(), kSide, kSide);

    static const auto basis = [] {
        std::array<std::array<double, kSide>, kSide> b{};
        for (int k = 0; k < kSide; ++k)
            for (int n = 0; n < kSide; ++n) b[k][n] = std::cos(std::numbers::pi / kSide * (n + 0.5) * k);
        return b;
    }();
    static const auto order = zigzag_ac(64);

    std::array<double, 64> coef{};
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto [u, v] = order[i];
        double acc = 0;
        for (int y = 0; y < kSide; ++y) {
            double row = 0;
            for (int x = 0; x < kSide; ++x) row += small[y * kSide + x] * basis[u][x];
            acc += row * basis[v][y];
        }
        // Snap to a fixed grid so float noise cannot flip bits of
        // mathematically equal coefficients (e.g. all-zero AC on flat images).
        coef[i] = std::round(acc * 1e6) / 1e6;
    }
    auto sorted = coef;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[31] + sorted[32]);
    PerceptualHash h;
    for (std::size_t i = 0; i < 64; ++i)
        if (coef[i] > median) h.bits |= (1ULL << i);
    return h;
}

std::size_t ClusterSet::member_count() const {
    std::size_t n = 0;
    for (const auto& c : clusters) n += c.members.size();
    return n;
}

ClusterSet cluster_by_similarity(const std::map<std::string, PerceptualHash>& hashes, int max_dist) {
    if (max_dist < 0 || max_dist > 64) throw ValidationError("max_dist must be in [0, 64]");
    std::vector<std::string> ids;
    std::vector<std::uint64_t> bits;
    for (const auto& [id, h] : hashes) {
        ids.push_back(id);
        bits.push_back(h.bits);
    }
    UnionFind uf(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j)
            if (std::popcount(bits[i] ^ bits[j]) <= max_dist) uf.unite(i, j);

    std::map<std::size_t, Cluster> by_root;
    for (std::size_t i = 0; i < ids.size(); ++i) by_root[uf.find(i)].members.push_back(ids[i]);
    ClusterSet out;
    for (auto& [root, c] : by_root) {
        c.id = c.members.front();  // map iteration order keeps members sorted
        out.clusters.push_back(std::move(c));
    }
    std::sort(out.clusters.begin(), out.clusters.end(), [](const Cluster& a, const Cluster& b) { return a.id < b.id; });
    return out;
}

FilterResult filter_clusters(const ClusterSet& clusters, std::size_t min_size) {
    if (min_size < 1) throw ValidationError("min_size must be >= 1");
    FilterResult r;
    for (const auto& c : clusters.clusters) {
        if (c.members.size() >= min_size)
            r.kept.clusters.push_back(c);
        else
            r.dropped_members.insert(r.dropped_members.end(), c.members.begin(), c.members.end());
    }
    std::sort(r.dropped_members.begin(), r.dropped_members.end());
    return r;
}

std::vector<std::string> sample_per_cluster(const ClusterSet& clusters, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw ValidationError("k must be >= 1");
    std::vector<std::string> out;
    for (const auto& c : clusters.clusters) {
        std::vector<std::string> pool = c.members;
        const std::size_t take = std::min(k, pool.size());
        if (take < pool.size()) {
            SeedStream rng(seed, "cluster", c.id);
            for (std::size_t i = 0; i < take; ++i) {
                const auto j = i + rng.uniform_index(pool.size() - i);
                std::swap(pool[i], pool[j]);
            }
            pool.resize(take);
            std::sort(pool.begin(), pool.end());
        }
        out.insert(out.end(), pool.begin(), pool.end());
    }
    return out;
}

void write_cluster_report(const ClusterSet& clusters, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write cluster report: " + path.string());
    for (const auto& c : clusters.clusters) out << c.id << '\t' << c.members.size() << '\t' << join(c.members, ",") << '\n';
}

ClusterSet read_cluster_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open cluster report: " + path.string());
    ClusterSet set;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line, '\t');
        if (f.size() != 3) throw ParseError("cluster report needs 3 fields", lineno);
        Cluster c{f[0], split(f[2], ',')};
        if (std::to_string(c.members.size()) != f[1]) throw ParseError("cluster size mismatch", lineno);
        set.clusters.push_back(std::move(c));
    }
    return set;
}

}  // namespace phishbench
