#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "phishbench/core.hpp"
#include "phishbench/png_io.hpp"
#include "phishbench/random.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace phishbench;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("phishbench-test-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

inline RgbImage solid(int w, int h, Rgb c) { return RgbImage(w, h, c); }

// Uniform random bytes; every pixel independent.
inline RgbImage noise(int w, int h, SeedStream& rng) {
    RgbImage img(w, h);
    for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.uniform_index(256));
    return img;
}

// Random coloured blocks: corner-rich and compressible.
inline RgbImage blocks(int w, int h, int block, SeedStream& rng) {
    RgbImage img(w, h);
    for (int by = 0; by < h; by += block)
        for (int bx = 0; bx < w; bx += block) {
            const Rgb c{static_cast<std::uint8_t>(rng.uniform_index(256)), static_cast<std::uint8_t>(rng.uniform_index(256)),
                        static_cast<std::uint8_t>(rng.uniform_index(256))};
            fill(img, Rect{bx, by, std::min(block, w - bx), std::min(block, h - by)}, c);
        }
    return img;
}

// One brand with one logo, one screenshot and the given domains.
inline void add_brand(const fs::path& root, const std::string& brand, const RgbImage& logo, const RgbImage& shot,
                      const std::string& domains) {
    fs::create_directories(root / brand / "logos");
    fs::create_directories(root / brand / "screenshots");
    write_png(root / brand / "logos" / "logo.png", logo);
    write_png(root / brand / "screenshots" / "home.png", shot);
    write_text(root / brand / "domains.txt", domains);
}

}  // namespace testsupport
