#include "phishbench/random.hpp"

namespace phishbench {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t s = a ^ (b * 0x9E3779B97F4A7C15ULL);
    return splitmix64(s);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

SeedStream::SeedStream(std::uint64_t raw_seed) : origin_(raw_seed) {
    std::uint64_t st = raw_seed;
    for (auto& s : s_) s = splitmix64(st);
}

SeedStream::SeedStream(std::uint64_t seed, std::string_view module, std::string_view key)
    : SeedStream(mix(mix(seed, fnv1a64(module)), fnv1a64(key))) {}

SeedStream SeedStream::split(std::string_view key) const { return SeedStream(mix(origin_, fnv1a64(key))); }

std::uint64_t SeedStream::next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

std::uint64_t SeedStream::uniform_index(std::uint64_t n) noexcept {
    // Rejection sampling on the top of the range keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

double SeedStream::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

}  // namespace phishbench
