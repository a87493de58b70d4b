#include "phishbench/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

namespace phishbench {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
    // libpng requires this handler not to return; longjmp back to the caller.
    auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
    if (buf) *buf = msg;
    png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

// Decodes to 8-bit RGBA regardless of the stored format.
RgbaImage decode(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw AssetError("cannot open image: " + path.string());

    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw AssetError("libpng init failed");
    }
    std::vector<png_bytep> rows;
    RgbaImage img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw AssetError("cannot decode PNG " + path.string() + (err.empty() ? "" : ": " + err));
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (!(color & PNG_COLOR_MASK_ALPHA) && !png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    img = RgbaImage(w, h);
    rows.resize(h);
    for (int y = 0; y < h; ++y) rows[y] = img.at(0, y);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

template <std::size_t C>
void encode(const std::filesystem::path& path, const Raster<C>& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IOError("cannot write image: " + path.string());
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IOError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IOError("cannot encode PNG " + path.string() + ": " + err);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width(), img.height(), 8,
                 C == 4 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height(); ++y) png_write_row(png, img.at(0, y));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbaImage read_png_rgba(const std::filesystem::path& path) { return decode(path); }

RgbImage read_png_rgb(const std::filesystem::path& path) {
    const RgbaImage rgba = decode(path);
    if (fully_opaque(rgba)) {
        RgbImage out(rgba.width(), rgba.height());
        for (int y = 0; y < rgba.height(); ++y)
            for (int x = 0; x < rgba.width(); ++x) {
                const auto* s = rgba.at(x, y);
                out.set_pixel(x, y, {s[0], s[1], s[2]});
            }
        return out;
    }
    return flatten(rgba);
}

void write_png(const std::filesystem::path& path, const RgbImage& img) { encode(path, img); }
void write_png(const std::filesystem::path& path, const RgbaImage& img) { encode(path, img); }

}  // namespace phishbench
