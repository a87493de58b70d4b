#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "phishbench/image.hpp"
#include "phishbench/random.hpp"

namespace phishbench {

/// 64-bit DCT perceptual hash.
///
/// The luma plane is area-resampled to 32x32, transformed with a 2-D DCT-II,
/// and the 64 lowest-frequency AC coefficients (zig-zag order, DC skipped)
/// are thresholded against their median. Skipping DC makes the hash
/// invariant to a uniform brightness offset.
struct PerceptualHash {
    std::uint64_t bits = 0;
    friend bool operator==(const PerceptualHash&, const PerceptualHash&) = default;
};

PerceptualHash perceptual_hash(const RgbImage& image);

inline int hamming(PerceptualHash a, PerceptualHash b) noexcept { return std::popcount(a.bits ^ b.bits); }

struct Cluster {
    std::string id;                    // lexicographically smallest member
    std::vector<std::string> members;  // sorted
};

/// Partition of the input ids, ordered by cluster id.
struct ClusterSet {
    std::vector<Cluster> clusters;

    std::size_t member_count() const;
};

/// Connected components of the graph joining ids whose hashes are within
/// `max_dist` bits of each other.
ClusterSet cluster_by_similarity(const std::map<std::string, PerceptualHash>& hashes, int max_dist);

struct FilterResult {
    ClusterSet kept;
    std::vector<std::string> dropped_members;  // sorted
};

/// Drops clusters with fewer than `min_size` members.
FilterResult filter_clusters(const ClusterSet& clusters, std::size_t min_size);

/// Draws min(k, |cluster|) ids per cluster without replacement. Each cluster
/// uses its own stream `("cluster", cluster_id)` under `seed`, so the result
/// for one cluster does not depend on the others. Ids are returned grouped by
/// cluster (in cluster order) and sorted within each group.
std::vector<std::string> sample_per_cluster(const ClusterSet& clusters, std::size_t k, std::uint64_t seed);

void write_cluster_report(const ClusterSet& clusters, const std::filesystem::path& path);
ClusterSet read_cluster_report(const std::filesystem::path& path);

}  // namespace phishbench
