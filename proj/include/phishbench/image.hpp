#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "phishbench/errors.hpp"

namespace phishbench {

/// Interleaved 8-bit raster with a compile-time channel count.
template <std::size_t Channels>
class Raster {
public:
    static constexpr std::size_t channels = Channels;
    using Pixel = std::array<std::uint8_t, Channels>;

    Raster() = default;
    Raster(int width, int height, Pixel fill = {})
        : width_(width), height_(height) {
        if (width < 1 || height < 1) throw ShapeError("raster dimensions must be at least 1x1");
        data_.resize(static_cast<std::size_t>(width) * height * Channels);
        for (std::size_t i = 0; i < data_.size(); i += Channels)
            for (std::size_t c = 0; c < Channels; ++c) data_[i + c] = fill[c];
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

    std::uint8_t* at(int x, int y) noexcept {
        return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * Channels;
    }
    const std::uint8_t* at(int x, int y) const noexcept {
        return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * Channels;
    }
    Pixel pixel(int x, int y) const noexcept {
        Pixel p;
        const auto* src = at(x, y);
        for (std::size_t c = 0; c < Channels; ++c) p[c] = src[c];
        return p;
    }
    void set_pixel(int x, int y, const Pixel& p) noexcept {
        auto* dst = at(x, y);
        for (std::size_t c = 0; c < Channels; ++c) dst[c] = p[c];
    }

    std::span<std::uint8_t> bytes() noexcept { return data_; }
    std::span<const std::uint8_t> bytes() const noexcept { return data_; }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

using GrayImage = Raster<1>;
using RgbImage = Raster<3>;
using RgbaImage = Raster<4>;
using Rgb = RgbImage::Pixel;

/// Axis-aligned pixel rectangle, top-left origin.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool empty() const noexcept { return w <= 0 || h <= 0; }
    bool contains(int px, int py) const noexcept {
        return px >= x && py >= y && px < x + w && py < y + h;
    }
    bool inside(int width, int height) const noexcept {
        return x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= width && y + h <= height;
    }
    Rect intersect(const Rect& o) const noexcept;
    friend bool operator==(const Rect&, const Rect&) = default;
};

/// Real-valued image, channel-interleaved, values nominally in [0, 1].
struct FloatImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    FloatImage() = default;
    FloatImage(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t size() const noexcept { return data.size(); }
    double& operator()(int x, int y, int c) noexcept {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double operator()(int x, int y, int c) const noexcept {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool same_shape(const FloatImage& o) const noexcept {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

// Conversions.
FloatImage to_float(const RgbImage& img);
RgbImage to_rgb8(const FloatImage& img);
RgbaImage to_rgba(const RgbImage& img);
/// Drops alpha by compositing over `background`.
RgbImage flatten(const RgbaImage& img, Rgb background = {255, 255, 255});
bool fully_opaque(const RgbaImage& img);

/// BT.601 luma in [0, 255], unrounded.
std::vector<double> luma(const RgbImage& img);
inline double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

RgbImage crop(const RgbImage& img, const Rect& r);
/// Writes `patch` at (x, y); parts falling outside `dst` are clipped.
void paste(RgbImage& dst, const RgbImage& patch, int x, int y);
/// Alpha-composites `patch` over `dst` at (x, y), clipped. Alpha 0 leaves `dst`
/// untouched and alpha 255 copies the source exactly.
void composite(RgbImage& dst, const RgbaImage& patch, int x, int y);
void fill(RgbImage& img, const Rect& r, Rgb color);

enum class Interpolation { nearest, bilinear };

/// Resamples to (w, h) by sampling at mapped pixel centres.
template <std::size_t C>
Raster<C> resize(const Raster<C>& src, int w, int h, Interpolation interp = Interpolation::bilinear);

/// Area-averaging weights mapping `src_len` samples onto `dst_len` bins.
/// Row i holds the weights of destination bin i; each row sums to 1.
/// Works for both shrinking and enlarging.
std::vector<std::vector<double>> area_weights(int src_len, int dst_len);

/// Area-resamples a single-plane image stored row-major.
std::vector<double> area_resample(std::span<const double> plane, int w, int h, int dst_w, int dst_h);

/// Sum of absolute differences between horizontally and vertically adjacent samples.
std::uint64_t total_variation(const RgbImage& img);

extern template RgbImage resize(const RgbImage&, int, int, Interpolation);
extern template RgbaImage resize(const RgbaImage&, int, int, Interpolation);

}  // namespace phishbench
