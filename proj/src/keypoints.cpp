#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "phishbench/detect.hpp"

namespace phishbench {
namespace {

constexpr double kHarrisK = 0.04;
constexpr double kRelativeThreshold = 0.01;
constexpr int kMargin = 8;  // half the descriptor patch

struct Plane {
    int w = 0, h = 0;
    std::vector<double> v;
    double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
    double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
    double clamped(int x, int y) const { return (*this)(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); }
};

Plane make_plane(int w, int h) { return {w, h, std::vector<double>(static_cast<std::size_t>(w) * h, 0.0)}; }

// Separable 5-tap Gaussian (sigma 1) with replicated borders.
Plane smooth5(const Plane& in) {
    static const std::array<double, 5> taps = [] {
        std::array<double, 5> t{};
        double sum = 0;
        for (int i = 0; i < 5; ++i) sum += t[i] = std::exp(-0.5 * (i - 2) * (i - 2));
        for (auto& x : t) x /= sum;
        return t;
    }();
    Plane tmp = make_plane(in.w, in.h), out = make_plane(in.w, in.h);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            double s = 0;
            for (int k = 0; k < 5; ++k) s += taps[k] * in.clamped(x + k - 2, y);
            tmp(x, y) = s;
        }
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            double s = 0;
            for (int k = 0; k < 5; ++k) s += taps[k] * tmp.clamped(x, y + k - 2);
            out(x, y) = s;
        }
    return out;
}

}  // namespace

KeypointSet detect_keypoints(const RgbImage& image, const KeypointOptions& options) {
    const int w = image.width(), h = image.height();
    KeypointSet out;
    if (w < 2 * kMargin || h < 2 * kMargin) return out;

    Plane gray{w, h, luma(image)};
    Plane gx = make_plane(w, h), gy = make_plane(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto g = [&](int dx, int dy) { return gray.clamped(x + dx, y + dy); };
            gx(x, y) = (g(1, -1) + 2 * g(1, 0) + g(1, 1)) - (g(-1, -1) + 2 * g(-1, 0) + g(-1, 1));
            gy(x, y) = (g(-1, 1) + 2 * g(0, 1) + g(1, 1)) - (g(-1, -1) + 2 * g(0, -1) + g(1, -1));
        }
    Plane xx = make_plane(w, h), yy = make_plane(w, h), xy = make_plane(w, h);
    for (std::size_t i = 0; i < gx.v.size(); ++i) {
        xx.v[i] = gx.v[i] * gx.v[i];
        yy.v[i] = gy.v[i] * gy.v[i];
        xy.v[i] = gx.v[i] * gy.v[i];
    }
    xx = smooth5(xx);
    yy = smooth5(yy);
    xy = smooth5(xy);
    Plane r = make_plane(w, h);
    double max_r = 0;
    for (std::size_t i = 0; i < r.v.size(); ++i) {
        const double tr = xx.v[i] + yy.v[i];
        r.v[i] = xx.v[i] * yy.v[i] - xy.v[i] * xy.v[i] - kHarrisK * tr * tr;
        max_r = std::max(max_r, r.v[i]);
    }
    if (max_r <= 1.0) return out;

    // Non-max suppression; plateaus resolve to the first pixel in scan order.
    std::vector<Keypoint> cands;
    const double floor = kRelativeThreshold * max_r;
    for (int y = kMargin; y < h - kMargin; ++y)
        for (int x = kMargin; x < w - kMargin; ++x) {
            const double v = r(x, y);
            if (v < floor || v <= 1.0) continue;
            bool peak = true;
            for (int dy = -1; dy <= 1 && peak; ++dy)
                for (int dx = -1; dx <= 1 && peak; ++dx) {
                    if (!dx && !dy) continue;
                    const double n = r(x + dx, y + dy);
                    const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (n > v || (earlier && n == v)) peak = false;
                }
            if (peak) cands.push_back({x, y, v});
        }
    std::stable_sort(cands.begin(), cands.end(), [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });

    for (const auto& kp : cands) {
        if (out.points.size() >= options.max_keypoints) break;
        std::array<float, 128> d{};
        for (int py = 0; py < 16; ++py)
            for (int px = 0; px < 16; ++px) {
                const int x = kp.x - kMargin + px, y = kp.y - kMargin + py;
                const double mx = gx(x, y), my = gy(x, y);
                const double mag = std::hypot(mx, my);
                if (mag == 0) continue;
                const double angle = std::atan2(my, mx) + std::numbers::pi;
                const int bin = std::min(7, static_cast<int>(angle / (2 * std::numbers::pi) * 8));
                d[static_cast<std::size_t>(((py / 4) * 4 + px / 4) * 8 + bin)] += static_cast<float>(mag);
            }
        double norm = 0;
        for (float v : d) norm += static_cast<double>(v) * v;
        if (norm == 0) continue;
        norm = std::sqrt(norm);
        for (auto& v : d) v = static_cast<float>(v / norm);
        out.points.push_back(kp);
        out.descriptors.push_back(d);
    }
    return out;
}

std::size_t match_keypoints(const KeypointSet& query, const KeypointSet& train, double ratio) {
    if (train.descriptors.empty()) return 0;
    const double ratio2 = ratio * ratio;
    std::size_t matches = 0;
    for (const auto& q : query.descriptors) {
        float best = std::numeric_limits<float>::infinity(), second = best;
        for (const auto& t : train.descriptors) {
            float d = 0;
            for (std::size_t k = 0; k < 128; ++k) {
                const float e = q[k] - t[k];
                d += e * e;
            }
            if (d < best) {
                second = best;
                best = d;
            } else if (d < second) {
                second = d;
            }
        }
        if (static_cast<double>(best) < ratio2 * static_cast<double>(second)) ++matches;
    }
    return matches;
}

std::size_t keypoint_match(const RgbImage& a, const RgbImage& b, const KeypointOptions& options) {
    return match_keypoints(detect_keypoints(a, options), detect_keypoints(b, options), options.ratio);
}

}  // namespace phishbench
