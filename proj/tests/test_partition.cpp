#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "fedsim/errors.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/rng.hpp"

using namespace fedsim;

namespace {

// Cheap stand-in scans; partitioning only looks at id and tumor_size.
std::vector<Scan> fake_dataset(std::size_t n, std::uint64_t seed = 17) {
    Rng rng(seed);
    std::vector<Scan> scans(n);
    for (std::size_t i = 0; i < n; ++i) {
        scans[i].id = int(i);
        scans[i].grid_size = 2;
        scans[i].labels = {0, 0, 0, 1};
        scans[i].features.assign(16, 0.0);
        scans[i].tumor_size = int(rng.uniform_int(200));
    }
    return scans;
}

std::multiset<int> all_ids(const std::vector<Shard>& shards) {
    std::multiset<int> ids;
    for (const auto& s : shards) {
        for (const auto& scan : s.train) ids.insert(scan.id);
        for (const auto& scan : s.validation) ids.insert(scan.id);
    }
    return ids;
}

} // namespace

TEST_SUITE("partition") {

TEST_CASE("largest remainder hits the pinned shard sizes at 341 scans") {
    const auto sizes = largest_remainder_sizes(skewed14_proportions(), 341);
    CHECK(sizes.front() == 129); // 0.3783 * 341
    CHECK(sizes.back() == 3);    // 0.0088 * 341
    CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == 341);
}

TEST_CASE("largest remainder conserves the dataset for random proportions") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 2 + rng.uniform_int(12);
        std::vector<double> p(m);
        double sum = 0;
        for (auto& v : p) {
            v = rng.uniform(0.05, 1.0);
            sum += v;
        }
        for (auto& v : p) v /= sum;
        const std::size_t n = m * (2 + rng.uniform_int(40));
        const auto sizes = largest_remainder_sizes(p, n);
        CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == n);
    }
}

TEST_CASE("uniform proportions split evenly") {
    const auto sizes = largest_remainder_sizes({0.25, 0.25, 0.25, 0.25}, 40);
    for (auto s : sizes) CHECK(s == 10);
}

TEST_CASE("skewed14 profile is strongly non-IID") {
    const auto p = skewed14_proportions();
    CHECK(p.size() == 14);
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-12);
    const auto sizes = largest_remainder_sizes(p, 341);
    const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
    CHECK(double(*mx) / double(*mn) >= 40.0);
}

TEST_CASE("natural_split assigns every scan exactly once") {
    const auto dataset = fake_dataset(341);
    PartitionSpec spec;
    spec.proportions = skewed14_proportions();
    const auto shards = natural_split(dataset, spec, 99);
    CHECK(shards.size() == 14);
    CHECK(shards[0].train.size() == 129);
    CHECK(shards[13].train.size() == 3);

    std::multiset<int> want;
    for (const auto& s : dataset) want.insert(s.id);
    CHECK(all_ids(shards) == want);
}

TEST_CASE("natural_split rejects infeasible proportions") {
    const auto dataset = fake_dataset(10);
    PartitionSpec spec;
    spec.proportions = {0.999, 0.0005, 0.0005};
    CHECK_THROWS_AS(natural_split(dataset, spec, 1), ConfigError);

    PartitionSpec bad;
    bad.proportions = {0.6, 0.6};
    CHECK_THROWS_AS(natural_split(dataset, bad, 1), ConfigError);
}

TEST_CASE("artificial_split: shard counting and quantile ordering") {
    const auto dataset = fake_dataset(341);
    PartitionSpec spec;
    spec.proportions = skewed14_proportions();
    auto shards = natural_split(dataset, spec, 7);

    auto split = artificial_split(shards, 3, 5);
    CHECK(split.size() == 24); // 14 - 5 + 15

    // sub-shards are ordered by tumor size: bin j's max <= bin j+1's min
    std::map<std::string, std::vector<const Shard*>> grouped;
    for (const auto& s : split)
        if (s.collaborator_id.find('.') != std::string::npos)
            grouped[s.collaborator_id.substr(0, s.collaborator_id.find('.'))].push_back(&s);
    CHECK(grouped.size() == 5);
    for (const auto& [base, subs] : grouped) {
        (void)base;
        CHECK(subs.size() == 3);
        for (std::size_t j = 0; j + 1 < subs.size(); ++j) {
            int max_j = 0, min_next = 1 << 30;
            for (const auto& sc : subs[j]->train) max_j = std::max(max_j, sc.tumor_size);
            for (const auto& sc : subs[j + 1]->train)
                min_next = std::min(min_next, sc.tumor_size);
            CHECK(max_j <= min_next);
        }
    }

    // conservation through the artificial split
    std::multiset<int> want;
    for (const auto& s : dataset) want.insert(s.id);
    CHECK(all_ids(split) == want);

    // identity when largest_k == 0
    auto same = artificial_split(shards, 3, 0);
    CHECK(same.size() == shards.size());
}

TEST_CASE("artificial_split rejects shards smaller than bins") {
    auto dataset = fake_dataset(8);
    PartitionSpec spec;
    spec.proportions = {0.5, 0.5};
    auto shards = natural_split(dataset, spec, 1);
    CHECK_THROWS_AS(artificial_split(shards, 5, 2), ConfigError);
    CHECK_THROWS_AS(artificial_split(shards, 1, 1), ConfigError);
}

TEST_CASE("train_val_split ratios") {
    auto [t10, v10] = train_val_split(fake_dataset(10), 3);
    CHECK(t10.size() == 8);
    CHECK(v10.size() == 2);

    auto [t3, v3] = train_val_split(fake_dataset(3), 3);
    CHECK(t3.size() == 2);
    CHECK(v3.size() == 1);

    // deterministic under the same seed
    auto [ta, va] = train_val_split(fake_dataset(20), 5);
    auto [tb, vb] = train_val_split(fake_dataset(20), 5);
    for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i].id == tb[i].id);
    for (std::size_t i = 0; i < va.size(); ++i) CHECK(va[i].id == vb[i].id);

    CHECK_THROWS_AS(train_val_split(fake_dataset(1), 1), ConfigError);
}

TEST_CASE("build_shards: full pipeline conservation and ordering") {
    const auto dataset = fake_dataset(341);
    PartitionSpec spec;
    spec.proportions = skewed14_proportions();
    spec.artificial = true;
    spec.artificial_bins = 3;
    spec.largest_k = 2;
    const auto shards = build_shards(dataset, spec, 31);
    CHECK(shards.size() == 14 - 2 + 6);

    std::multiset<int> want;
    for (const auto& s : dataset) want.insert(s.id);
    CHECK(all_ids(shards) == want);

    CHECK(std::is_sorted(shards.begin(), shards.end(), [](const Shard& a, const Shard& b) {
        return a.collaborator_id < b.collaborator_id;
    }));
    for (const auto& s : shards) {
        CHECK(!s.validation.empty());
        CHECK(!s.train.empty());
        // disjoint train/validation
        std::set<int> train_ids;
        for (const auto& sc : s.train) train_ids.insert(sc.id);
        for (const auto& sc : s.validation) CHECK(!train_ids.count(sc.id));
    }
}

TEST_CASE("desk profile covers 40 scans with at least 2 per institution") {
    const auto p = desk_proportions();
    CHECK(p.size() == 14);
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-12);
    const auto sizes = largest_remainder_sizes(p, 40);
    CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == 40);
    for (auto s : sizes) CHECK(s >= 2);
    CHECK(sizes.front() == 8);
}

} // TEST_SUITE
