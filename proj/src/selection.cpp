#include "fedsim/selection.hpp"

#include <algorithm>
#include <limits>

#include "fedsim/errors.hpp"

namespace fedsim {

void TimeHistory::record(const std::string& collaborator_id, int round, double seconds) {
    if (seconds <= 0.0) throw UsageError("TimeHistory: round time must be positive");
    entries_[collaborator_id].emplace_back(round, seconds);
}

std::optional<double> TimeHistory::latest(const std::string& collaborator_id) const {
    const auto it = entries_.find(collaborator_id);
    if (it == entries_.end() || it->second.empty()) return std::nullopt;
    return it->second.back().second;
}

std::vector<std::string> select_all(const std::vector<std::string>& pool) {
    if (pool.empty()) throw ConfigError("select_all: empty collaborator pool");
    return pool;
}

std::vector<std::string> select_random_subset(const std::vector<std::string>& pool,
                                              int k, Rng& rng) {
    if (pool.empty()) throw ConfigError("select_random_subset: empty collaborator pool");
    if (k < 1 || static_cast<std::size_t>(k) > pool.size())
        throw ConfigError("select_random_subset: k out of range");

    std::vector<std::string> chosen = pool;
    for (int i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(i) +
                       rng.uniform_int(chosen.size() - static_cast<std::size_t>(i));
        std::swap(chosen[static_cast<std::size_t>(i)], chosen[j]);
    }
    chosen.resize(static_cast<std::size_t>(k));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<std::string> select_faster_than_pivot(const std::vector<std::string>& pool,
                                                  const TimeHistory& history,
                                                  const std::string& pivot) {
    // Unmeasured collaborators rank slowest, so they only ever participate as
    // the pivot, which guarantees they eventually get a time record.
    constexpr double kUnmeasured = std::numeric_limits<double>::infinity();
    const double pivot_time = history.latest(pivot).value_or(kUnmeasured);
    std::vector<std::string> selected;
    for (const auto& id : pool) {
        if (id == pivot) {
            selected.push_back(id);
            continue;
        }
        if (history.latest(id).value_or(kUnmeasured) < pivot_time) selected.push_back(id);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

std::vector<std::string> select_faster_than_random(const std::vector<std::string>& pool,
                                                   const TimeHistory& history,
                                                   int round, Rng& rng) {
    if (pool.empty())
        throw ConfigError("select_faster_than_random: empty collaborator pool");
    if (round < 0) throw UsageError("select_faster_than_random: negative round");
    if (round == 0) return pool;
    const std::string& pivot = pool[rng.uniform_int(pool.size())];
    return select_faster_than_pivot(pool, history, pivot);
}

} // namespace fedsim
