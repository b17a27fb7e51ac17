#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/synth_task.hpp"

namespace fedsim {

// How the dataset is carved into collaborator shards.
struct PartitionSpec {
    std::vector<double> proportions; // one per institution, sums to 1
    bool artificial = false;         // re-split the largest shards by tumor size
    int artificial_bins = 3;
    int largest_k = 5;
};

struct Shard {
    std::string collaborator_id;
    std::vector<Scan> train;
    std::vector<Scan> validation;

    std::size_t total() const { return train.size() + validation.size(); }
};

// Largest-remainder apportionment of n items over the given proportions.
std::vector<std::size_t> largest_remainder_sizes(const std::vector<double>& proportions,
                                                 std::size_t n);

// Seeded-random assignment of the dataset into institution shards sized by
// largest-remainder rounding. All scans land in the train list; the 80/20
// split happens later in build_shards. ConfigError when a shard comes out
// empty (proportions infeasible for the dataset size).
std::vector<Shard> natural_split(const std::vector<Scan>& dataset,
                                 const PartitionSpec& spec, std::uint64_t seed);

// Re-splits the largest_k shards (by train count) into `bins` sub-shards by
// tumor-size quantiles; sub-shard ids get a ".<bin>" suffix. Must run before
// the train/validation split.
std::vector<Shard> artificial_split(std::vector<Shard> shards, int bins, int largest_k);

// Seeded shuffle, then floor(0.8*N) train / remainder validation.
std::pair<std::vector<Scan>, std::vector<Scan>> train_val_split(std::vector<Scan> scans,
                                                                std::uint64_t seed);

// Full pipeline: natural split, optional artificial split, per-shard 80/20.
// Returned shards are sorted by collaborator id.
std::vector<Shard> build_shards(const std::vector<Scan>& dataset,
                                const PartitionSpec& spec, std::uint64_t seed);

// 14-institution profile with pinned extremes (37.83% for the
// largest institution, 0.88% for the smallest); intermediate values are a
// geometric interpolation, overridable in config.
std::vector<double> skewed14_proportions();

// 14-institution profile sized so a 40-scan dataset still gives every
// institution at least two scans; used by the fast desk-scale experiments.
std::vector<double> desk_proportions();

} // namespace fedsim
