#pragma once

#include <cstdint>
#include <string_view>

namespace phishbench {

/// Deterministic random stream derived from (run seed, module, key).
///
/// Every randomized step draws from a stream named after the module and the
/// sample (or cluster) it works on, so any single item's output can be
/// regenerated without replaying the rest of the run. The generator is
/// xoshiro256** seeded through splitmix64; draws are implemented here rather
/// than via <random> distributions so results do not depend on the standard
/// library vendor.
class SeedStream {
public:
    SeedStream(std::uint64_t seed, std::string_view module, std::string_view key);
    explicit SeedStream(std::uint64_t raw_seed);

    std::uint64_t next_u64() noexcept;
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) noexcept;
    /// Uniform real in [0, 1).
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Child stream for a sub-key; does not advance this stream.
    SeedStream split(std::string_view key) const;

private:
    std::uint64_t origin_;
    std::uint64_t s_[4];
};

std::uint64_t fnv1a64(std::string_view text) noexcept;

}  // namespace phishbench
