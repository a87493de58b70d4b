#include "phishbench/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace phishbench {

Rect Rect::intersect(const Rect& o) const noexcept {
    const int x0 = std::max(x, o.x);
    const int y0 = std::max(y, o.y);
    const int x1 = std::min(x + w, o.x + o.w);
    const int y1 = std::min(y + h, o.y + o.h);
    if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
    return {x0, y0, x1 - x0, y1 - y0};
}

FloatImage to_float(const RgbImage& img) {
    FloatImage out(img.width(), img.height(), 3);
    const auto src = img.bytes();
    for (std::size_t i = 0; i < src.size(); ++i) out.data[i] = src[i] / 255.0;
    return out;
}

RgbImage to_rgb8(const FloatImage& img) {
    if (img.channels != 3) throw ShapeError("to_rgb8 expects a 3-channel image");
    RgbImage out(img.width, img.height);
    auto dst = out.bytes();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0) * 255.0;
        dst[i] = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

RgbaImage to_rgba(const RgbImage& img) {
    RgbaImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const auto* s = img.at(x, y);
            out.set_pixel(x, y, {s[0], s[1], s[2], 255});
        }
    return out;
}

RgbImage flatten(const RgbaImage& img, Rgb background) {
    RgbImage out(img.width(), img.height(), background);
    composite(out, img, 0, 0);
    return out;
}

bool fully_opaque(const RgbaImage& img) {
    const auto b = img.bytes();
    for (std::size_t i = 3; i < b.size(); i += 4)
        if (b[i] != 255) return false;
    return true;
}

std::vector<double> luma(const RgbImage& img) {
    std::vector<double> out(img.pixel_count());
    const auto b = img.bytes();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = luma(b[3 * i], b[3 * i + 1], b[3 * i + 2]);
    return out;
}

RgbImage crop(const RgbImage& img, const Rect& r) {
    if (!r.inside(img.width(), img.height())) throw RegionError("crop rectangle outside image");
    RgbImage out(r.w, r.h);
    for (int y = 0; y < r.h; ++y) std::copy_n(img.at(r.x, r.y + y), 3 * r.w, out.at(0, y));
    return out;
}

void paste(RgbImage& dst, const RgbImage& patch, int x, int y) {
    const Rect area = Rect{x, y, patch.width(), patch.height()}.intersect({0, 0, dst.width(), dst.height()});
    for (int yy = area.y; yy < area.y + area.h; ++yy)
        std::copy_n(patch.at(area.x - x, yy - y), 3 * area.w, dst.at(area.x, yy));
}

void composite(RgbImage& dst, const RgbaImage& patch, int x, int y) {
    const Rect area = Rect{x, y, patch.width(), patch.height()}.intersect({0, 0, dst.width(), dst.height()});
    for (int yy = area.y; yy < area.y + area.h; ++yy)
        for (int xx = area.x; xx < area.x + area.w; ++xx) {
            const auto* s = patch.at(xx - x, yy - y);
            auto* d = dst.at(xx, yy);
            const unsigned a = s[3];
            if (a == 0) continue;
            for (int c = 0; c < 3; ++c)
                d[c] = static_cast<std::uint8_t>((a * s[c] + (255 - a) * d[c] + 127) / 255);
        }
}

void fill(RgbImage& img, const Rect& r, Rgb color) {
    const Rect area = r.intersect({0, 0, img.width(), img.height()});
    for (int y = area.y; y < area.y + area.h; ++y)
        for (int x = area.x; x < area.x + area.w; ++x) img.set_pixel(x, y, color);
}

template <std::size_t C>
Raster<C> resize(const Raster<C>& src, int w, int h, Interpolation interp) {
    Raster<C> out(w, h);
    const double sx = static_cast<double>(src.width()) / w;
    const double sy = static_cast<double>(src.height()) / h;
    for (int y = 0; y < h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
        for (int x = 0; x < w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
            auto* d = out.at(x, y);
            if (interp == Interpolation::nearest) {
                const auto* s = src.at(static_cast<int>(std::lround(fx)), static_cast<int>(std::lround(fy)));
                std::copy_n(s, C, d);
                continue;
            }
            const int x0 = static_cast<int>(fx);
            const int y0 = static_cast<int>(fy);
            const int x1 = std::min(x0 + 1, src.width() - 1);
            const int y1 = std::min(y0 + 1, src.height() - 1);
            const double ax = fx - x0;
            const double ay = fy - y0;
            for (std::size_t c = 0; c < C; ++c) {
                const double top = src.at(x0, y0)[c] * (1 - ax) + src.at(x1, y0)[c] * ax;
                const double bot = src.at(x0, y1)[c] * (1 - ax) + src.at(x1, y1)[c] * ax;
                d[c] = static_cast<std::uint8_t>(std::lround(top * (1 - ay) + bot * ay));
            }
        }
    }
    return out;
}

template RgbImage resize(const RgbImage&, int, int, Interpolation);
template RgbaImage resize(const RgbaImage&, int, int, Interpolation);

std::vector<std::vector<double>> area_weights(int src_len, int dst_len) {
    std::vector<std::vector<double>> rows(dst_len, std::vector<double>(src_len, 0.0));
    const double scale = static_cast<double>(src_len) / dst_len;
    for (int i = 0; i < dst_len; ++i) {
        const double lo = i * scale;
        const double hi = (i + 1) * scale;
        for (int j = static_cast<int>(std::floor(lo)); j < src_len && j < hi; ++j) {
            const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
            if (overlap > 0) rows[i][j] = overlap / scale;
        }
    }
    return rows;
}

std::vector<double> area_resample(std::span<const double> plane, int w, int h, int dst_w, int dst_h) {
    const auto wx = area_weights(w, dst_w);
    const auto wy = area_weights(h, dst_h);
    // Horizontal pass then vertical pass.
    std::vector<double> tmp(static_cast<std::size_t>(dst_w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int i = 0; i < dst_w; ++i) {
            double acc = 0;
            for (int x = 0; x < w; ++x)
                if (wx[i][x] != 0) acc += wx[i][x] * plane[static_cast<std::size_t>(y) * w + x];
            tmp[static_cast<std::size_t>(y) * dst_w + i] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(dst_w) * dst_h, 0.0);
    for (int j = 0; j < dst_h; ++j)
        for (int y = 0; y < h; ++y) {
            const double wgt = wy[j][y];
            if (wgt == 0) continue;
            for (int i = 0; i < dst_w; ++i)
                out[static_cast<std::size_t>(j) * dst_w + i] += wgt * tmp[static_cast<std::size_t>(y) * dst_w + i];
        }
    return out;
}

std::uint64_t total_variation(const RgbImage& img) {
    std::uint64_t tv = 0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) {
                const int v = img.at(x, y)[c];
                if (x + 1 < img.width()) tv += std::abs(v - img.at(x + 1, y)[c]);
                if (y + 1 < img.height()) tv += std::abs(v - img.at(x, y + 1)[c]);
            }
    return tv;
}

}  // namespace phishbench
