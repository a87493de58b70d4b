#pragma once

#include <filesystem>

#include "phishbench/image.hpp"

namespace phishbench {

// PNG decode converts any colour type / bit depth to 8-bit RGB or RGBA.
// Failures raise AssetError naming the path.
RgbImage read_png_rgb(const std::filesystem::path& path);
RgbaImage read_png_rgba(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& img);
void write_png(const std::filesystem::path& path, const RgbaImage& img);

}  // namespace phishbench
