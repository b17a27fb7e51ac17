#include "fedsim/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

void validate_proportions(const std::vector<double>& p) {
    if (p.empty()) throw ConfigError("partition: no proportions given");
    double sum = 0.0;
    for (double v : p) {
        if (v <= 0.0) throw ConfigError("partition: proportions must be positive");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("partition: proportions must sum to 1");
}

std::string institution_id(std::size_t index) {
    const std::string n = std::to_string(index + 1);
    return "inst" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n;
}

} // namespace

std::vector<std::size_t> largest_remainder_sizes(const std::vector<double>& proportions,
                                                 std::size_t n) {
    validate_proportions(proportions);
    const std::size_t m = proportions.size();
    std::vector<std::size_t> sizes(m);
    std::vector<std::pair<double, std::size_t>> remainders(m); // (remainder, index)
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double exact = proportions[i] * static_cast<double>(n);
        sizes[i] = static_cast<std::size_t>(std::floor(exact));
        remainders[i] = {exact - std::floor(exact), i};
        assigned += sizes[i];
    }
    // Ties broken toward the lower index for determinism.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) sizes[remainders[k % m].second]++;
    return sizes;
}

std::vector<Shard> natural_split(const std::vector<Scan>& dataset,
                                 const PartitionSpec& spec, std::uint64_t seed) {
    validate_proportions(spec.proportions);
    if (dataset.size() < spec.proportions.size())
        throw ConfigError("natural_split: fewer scans than institutions");

    const auto sizes = largest_remainder_sizes(spec.proportions, dataset.size());
    for (std::size_t i = 0; i < sizes.size(); ++i)
        if (sizes[i] == 0)
            throw ConfigError("natural_split: proportion " + std::to_string(spec.proportions[i]) +
                              " infeasible for dataset size " + std::to_string(dataset.size()));

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed_str(seed, "natural_split"));
    rng.shuffle(order.begin(), order.end());

    std::vector<Shard> shards(sizes.size());
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        shards[i].collaborator_id = institution_id(i);
        shards[i].train.reserve(sizes[i]);
        for (std::size_t k = 0; k < sizes[i]; ++k)
            shards[i].train.push_back(dataset[order[cursor++]]);
    }
    return shards;
}

std::vector<Shard> artificial_split(std::vector<Shard> shards, int bins, int largest_k) {
    if (largest_k == 0) return shards;
    if (bins < 2) throw ConfigError("artificial_split: bins must be >= 2");
    if (largest_k < 0 || static_cast<std::size_t>(largest_k) > shards.size())
        throw ConfigError("artificial_split: largest_k out of range");
    for (const auto& s : shards)
        if (!s.validation.empty())
            throw UsageError("artificial_split: must run before the train/validation split");

    // Indices of the largest_k shards by train count; ties toward lower index.
    std::vector<std::size_t> by_size(shards.size());
    std::iota(by_size.begin(), by_size.end(), std::size_t{0});
    std::stable_sort(by_size.begin(), by_size.end(), [&](std::size_t a, std::size_t b) {
        return shards[a].train.size() > shards[b].train.size();
    });
    std::vector<bool> split_me(shards.size(), false);
    for (int k = 0; k < largest_k; ++k) split_me[by_size[static_cast<std::size_t>(k)]] = true;

    std::vector<Shard> out;
    for (std::size_t i = 0; i < shards.size(); ++i) {
        if (!split_me[i]) {
            out.push_back(std::move(shards[i]));
            continue;
        }
        Shard& big = shards[i];
        if (big.train.size() < static_cast<std::size_t>(bins))
            throw ConfigError("artificial_split: shard " + big.collaborator_id +
                              " has fewer scans than bins");
        std::stable_sort(big.train.begin(), big.train.end(), [](const Scan& a, const Scan& b) {
            if (a.tumor_size != b.tumor_size) return a.tumor_size < b.tumor_size;
            return a.id < b.id;
        });
        const std::size_t n = big.train.size();
        for (int b = 0; b < bins; ++b) {
            const std::size_t begin = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(bins);
            const std::size_t end = n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(bins);
            Shard sub;
            sub.collaborator_id = big.collaborator_id + "." + std::to_string(b);
            sub.train.assign(big.train.begin() + static_cast<std::ptrdiff_t>(begin),
                             big.train.begin() + static_cast<std::ptrdiff_t>(end));
            out.push_back(std::move(sub));
        }
    }
    return out;
}

std::pair<std::vector<Scan>, std::vector<Scan>> train_val_split(std::vector<Scan> scans,
                                                                std::uint64_t seed) {
    if (scans.size() < 2)
        throw ConfigError("train_val_split: need at least 2 scans");
    Rng rng(seed);
    rng.shuffle(scans.begin(), scans.end());
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(0.8 * static_cast<double>(scans.size())));
    std::vector<Scan> train(scans.begin(), scans.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<Scan> val(scans.begin() + static_cast<std::ptrdiff_t>(n_train), scans.end());
    return {std::move(train), std::move(val)};
}

std::vector<Shard> build_shards(const std::vector<Scan>& dataset,
                                const PartitionSpec& spec, std::uint64_t seed) {
    std::vector<Shard> shards = natural_split(dataset, spec, seed);
    if (spec.artificial)
        shards = artificial_split(std::move(shards), spec.artificial_bins, spec.largest_k);
    for (auto& shard : shards) {
        auto [train, val] = train_val_split(
            std::move(shard.train),
            derive_seed(seed, fnv1a64("train_val"), fnv1a64(shard.collaborator_id)));
        shard.train = std::move(train);
        shard.validation = std::move(val);
    }
    std::sort(shards.begin(), shards.end(), [](const Shard& a, const Shard& b) {
        return a.collaborator_id < b.collaborator_id;
    });
    return shards;
}

std::vector<double> skewed14_proportions() {
    // Endpoints pinned; middle values interpolate geometrically and are
    // rescaled so the vector sums to exactly 1.
    constexpr double kLargest = 0.3783;
    constexpr double kSmallest = 0.0088;
    constexpr std::size_t kInstitutions = 14;

    std::vector<double> p(kInstitutions);
    p.front() = kLargest;
    p.back() = kSmallest;
    const double ratio = std::pow(kSmallest / kLargest, 1.0 / (kInstitutions - 1));
    double middle_sum = 0.0;
    for (std::size_t i = 1; i + 1 < kInstitutions; ++i) {
        p[i] = kLargest * std::pow(ratio, static_cast<double>(i));
        middle_sum += p[i];
    }
    const double scale = (1.0 - kLargest - kSmallest) / middle_sum;
    for (std::size_t i = 1; i + 1 < kInstitutions; ++i) p[i] *= scale;
    return p;
}

std::vector<double> desk_proportions() {
    // 40 * p is integral for each entry, so a 40-scan dataset splits exactly
    // into sizes {8,5,4,3,2,...,2} with every institution getting >= 2 scans.
    return {0.200, 0.125, 0.100, 0.075, 0.050, 0.050, 0.050,
            0.050, 0.050, 0.050, 0.050, 0.050, 0.050, 0.050};
}

} // namespace fedsim
