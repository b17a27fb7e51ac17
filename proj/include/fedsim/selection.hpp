#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/rng.hpp"

namespace fedsim {

// Simulated round times per collaborator, recorded only for rounds in which
// the collaborator actually trained.
class TimeHistory {
public:
    void record(const std::string& collaborator_id, int round, double seconds);

    // Most recent recorded round time, if any.
    std::optional<double> latest(const std::string& collaborator_id) const;

    const std::map<std::string, std::vector<std::pair<int, double>>>& entries() const {
        return entries_;
    }

private:
    std::map<std::string, std::vector<std::pair<int, double>>> entries_;
};

// Every collaborator, order preserved (callers keep pools sorted by id).
std::vector<std::string> select_all(const std::vector<std::string>& pool);

// k distinct ids, seeded choice, returned sorted by id.
std::vector<std::string> select_random_subset(const std::vector<std::string>& pool,
                                              int k, Rng& rng);

// Pivot-plus-faster rule applied against a known pivot; exposed for
// exhaustive-pivot tests. Collaborators without any time record rank slowest.
std::vector<std::string> select_faster_than_pivot(const std::vector<std::string>& pool,
                                                  const TimeHistory& history,
                                                  const std::string& pivot);

// Round 0: everyone trains so that time statistics exist. Later rounds: one
// pivot drawn uniformly at random; the pivot plus every collaborator whose
// latest round time is strictly smaller participate.
std::vector<std::string> select_faster_than_random(const std::vector<std::string>& pool,
                                                   const TimeHistory& history,
                                                   int round, Rng& rng);

} // namespace fedsim
