#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "phishbench/detect.hpp"
#include "phishbench/text.hpp"

namespace phishbench {
namespace {

constexpr double kTiny = 1e-13;

// Dense min-cost flow on the bipartite transport graph.
class Transport {
public:
    Transport(const Signature& a, const Signature& b) : m_(a.bins.size()), n_(b.bins.size()), v_(m_ + n_ + 2) {
        cap_.assign(v_ * v_, 0.0);
        cost_.assign(v_ * v_, 0.0);
        const std::size_t s = source(), t = sink();
        for (std::size_t i = 0; i < m_; ++i) cap_[idx(s, src(i))] = a.bins[i].weight;
        for (std::size_t j = 0; j < n_; ++j) cap_[idx(dst(j), t)] = b.bins[j].weight;
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = 0; j < n_; ++j) {
                const double c = ground_distance(a.bins[i], b.bins[j]);
                cap_[idx(src(i), dst(j))] = 2.0;  // effectively unbounded; total mass is 1
                cost_[idx(src(i), dst(j))] = c;
                cost_[idx(dst(j), src(i))] = -c;
            }
        target_ = std::min(std::accumulate(a.bins.begin(), a.bins.end(), 0.0,
                                           [](double acc, const SignatureBin& x) { return acc + x.weight; }),
                           std::accumulate(b.bins.begin(), b.bins.end(), 0.0,
                                           [](double acc, const SignatureBin& x) { return acc + x.weight; }));
    }

    double solve() {
        std::vector<double> potential(v_, 0.0), dist(v_);
        std::vector<std::size_t> prev(v_);
        std::vector<char> done(v_);
        double flow = 0, work = 0;
        while (flow < target_ - kTiny) {
            std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
            std::fill(done.begin(), done.end(), 0);
            dist[source()] = 0;
            for (std::size_t iter = 0; iter < v_; ++iter) {
                std::size_t u = v_;
                for (std::size_t x = 0; x < v_; ++x)
                    if (!done[x] && (u == v_ || dist[x] < dist[u])) u = x;
                if (u == v_ || std::isinf(dist[u])) break;
                done[u] = 1;
                for (std::size_t w = 0; w < v_; ++w) {
                    if (cap_[idx(u, w)] <= kTiny || done[w]) continue;
                    const double reduced = std::max(0.0, cost_[idx(u, w)] + potential[u] - potential[w]);
                    if (dist[u] + reduced < dist[w]) {
                        dist[w] = dist[u] + reduced;
                        prev[w] = u;
                    }
                }
            }
            if (std::isinf(dist[sink()])) break;
            for (std::size_t x = 0; x < v_; ++x)
                if (!std::isinf(dist[x])) potential[x] += dist[x];

            double push = target_ - flow;
            for (std::size_t w = sink(); w != source(); w = prev[w]) push = std::min(push, cap_[idx(prev[w], w)]);
            for (std::size_t w = sink(); w != source(); w = prev[w]) {
                cap_[idx(prev[w], w)] -= push;
                cap_[idx(w, prev[w])] += push;
                work += push * cost_[idx(prev[w], w)];
            }
            flow += push;
        }
        return flow > 0 ? work / flow : 0.0;
    }

private:
    std::size_t idx(std::size_t u, std::size_t w) const { return u * v_ + w; }
    std::size_t source() const { return 0; }
    std::size_t sink() const { return v_ - 1; }
    std::size_t src(std::size_t i) const { return 1 + i; }
    std::size_t dst(std::size_t j) const { return 1 + m_ + j; }

    std::size_t m_, n_, v_;
    std::vector<double> cap_, cost_;
    double target_ = 0;
};

}  // namespace

Signature emd_signature(const RgbImage& image, std::size_t max_bins) {
    struct Acc {
        std::size_t count = 0;
        double sx = 0, sy = 0;
    };
    std::vector<Acc> acc(4096);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            const auto* p = image.at(x, y);
            auto& a = acc[(p[0] >> 4) << 8 | (p[1] >> 4) << 4 | (p[2] >> 4)];
            ++a.count;
            a.sx += x + 0.5;
            a.sy += y + 0.5;
        }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < acc.size(); ++i)
        if (acc[i].count) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return acc[l].count > acc[r].count; });
    if (order.size() > max_bins) order.resize(max_bins);

    std::size_t kept = 0;
    for (auto i : order) kept += acc[i].count;
    Signature sig;
    for (auto i : order) {
        const auto& a = acc[i];
        SignatureBin bin;
        bin.feature = {((i >> 8) * 16 + 8) / 255.0, (((i >> 4) & 15) * 16 + 8) / 255.0, ((i & 15) * 16 + 8) / 255.0,
                       a.sx / a.count / image.width(), a.sy / a.count / image.height()};
        bin.weight = static_cast<double>(a.count) / kept;
        sig.bins.push_back(bin);
    }
    return sig;
}

double ground_distance(const SignatureBin& a, const SignatureBin& b) {
    double d2 = 0;
    for (int k = 0; k < 5; ++k) d2 += (a.feature[k] - b.feature[k]) * (a.feature[k] - b.feature[k]);
    return std::sqrt(d2 / 5.0);
}

double emd_distance(const Signature& a, const Signature& b) {
    if (a.bins.empty() || b.bins.empty()) throw ValidationError("EMD of an empty signature");
    return std::clamp(Transport(a, b).solve(), 0.0, 1.0);
}

std::string_view to_string(ScoreSemantics s) { return s == ScoreSemantics::similarity_ge ? "similarity_ge" : "distance_le"; }

ScoreSemantics parse_score_semantics(std::string_view text) {
    if (text == "similarity_ge") return ScoreSemantics::similarity_ge;
    if (text == "distance_le") return ScoreSemantics::distance_le;
    throw ConfigError("unknown score semantics '" + std::string(text) + "'");
}

EmdDetector::EmdDetector(const ReferenceList& refs, double threshold, ScoreSemantics semantics, std::size_t max_bins)
    : threshold_(threshold), semantics_(semantics), max_bins_(max_bins) {
    for (const auto& [name, brand] : refs.brands)
        for (const auto& shot : brand.screenshots) refs_.push_back({name, emd_signature(shot.image, max_bins)});
    if (refs_.empty()) throw ConfigError("EMD detector needs at least one reference screenshot");
}

Verdict EmdDetector::detect(const RgbImage& screenshot) const {
    const auto start = std::chrono::steady_clock::now();
    const Signature sig = emd_signature(screenshot, max_bins_);
    double best = std::numeric_limits<double>::infinity();
    const std::string* brand = nullptr;
    for (const auto& r : refs_) {
        const double d = emd_distance(sig, r.signature);
        if (d < best) {
            best = d;
            brand = &r.brand;
        }
    }
    const double score = semantics_ == ScoreSemantics::similarity_ge ? 1.0 - best : best;
    const bool hit = semantics_ == ScoreSemantics::similarity_ge ? score >= threshold_ : score <= threshold_;
    Verdict v = hit ? Verdict::phishing(*brand, score) : Verdict::benign(score);
    v.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return v;
}

Verdict emd_detect(const ScreenshotSample& sample, const ReferenceList& refs, double threshold, ScoreSemantics semantics) {
    return EmdDetector(refs, threshold, semantics).detect(sample.image);
}

}  // namespace phishbench
