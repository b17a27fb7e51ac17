#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/param_vector.hpp"
#include "fedsim/update.hpp"

namespace fedsim {

// Everything the server needs for one aggregation step. Updates are sorted by
// collaborator id on construction so summation order is deterministic.
struct AggregationBatch {
    std::vector<Update> updates;
    std::vector<double> relative_sizes;       // p_i = n_i / sum(n_j)
    double tau_eff = 0.0;                     // sum(p_i * tau_i)
    std::optional<double> prev_global_val;    // previous round's aggregate mean Dice
};

AggregationBatch make_batch(std::vector<Update> updates,
                            std::optional<double> prev_global_val = std::nullopt);

// Server momentum: velocity v, decay beta, server step size gamma.
struct MomentumState {
    ParamVector velocity;
    double beta = 0.9;
    double gamma = 1.0;
};

MomentumState make_momentum_state(LayoutPtr layout, double beta = 0.9, double gamma = 1.0);

// x' = x - sum(p_i * delta_i).
ParamVector fedavg(const ParamVector& global, const AggregationBatch& batch);

// Normalized averaging: x' = x - tau_eff * sum(p_i * delta_i / tau_i).
ParamVector fednova(const ParamVector& global, const AggregationBatch& batch);

// Reduced form: x' = x - gamma * sum(delta_i). With gamma = sum(p_i^2) and
// tau_i proportional to n_i this reproduces fednova exactly.
ParamVector fednova_reduced(const ParamVector& global,
                            const std::vector<ParamVector>& deltas, double gamma);

// Server momentum: dw = sum(p_i * delta_i); v' = beta*v + dw; x' = x - gamma*v'.
// Returns the new model and mutates the state's velocity.
ParamVector fedavgm(const ParamVector& global, const AggregationBatch& batch,
                    MomentumState& state);

// x' = per-coordinate median of the post-training models {x - delta_i}.
ParamVector median_aggregate(const ParamVector& global, const AggregationBatch& batch);

// Keeps only updates whose local validation mean Dice beats the previous
// round's aggregate value, renormalizing the relative sizes. No previous
// value (round 0) or no survivors: the batch passes through unchanged.
AggregationBatch improved_nodes_filter(const AggregationBatch& batch);

// Strategy object owned by the engine; fedavgm keeps momentum between rounds.
class Aggregator {
public:
    virtual ~Aggregator() = default;
    virtual ParamVector aggregate(const ParamVector& global,
                                  const AggregationBatch& batch) = 0;
};

struct AggregatorParams {
    double beta = 0.9;  // fedavgm momentum
    double gamma = 1.0; // fedavgm / fednova_reduced server step size
};

// name is one of: fedavg, fednova, fednova_reduced, fedavgm, median,
// fedavg+improved_nodes, fedavgm+improved_nodes.
std::unique_ptr<Aggregator> make_aggregator(const std::string& name,
                                            const AggregatorParams& params,
                                            LayoutPtr layout);

} // namespace fedsim
