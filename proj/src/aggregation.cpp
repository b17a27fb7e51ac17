#include "fedsim/aggregation.hpp"

#include <algorithm>

#include "fedsim/errors.hpp"

namespace fedsim {

AggregationBatch make_batch(std::vector<Update> updates,
                            std::optional<double> prev_global_val) {
    if (updates.empty()) throw UsageError("make_batch: no updates");
    std::sort(updates.begin(), updates.end(), [](const Update& a, const Update& b) {
        return a.collaborator_id < b.collaborator_id;
    });

    long total = 0;
    for (const auto& u : updates) {
        if (u.tau < 1) throw DataError("make_batch: update with tau < 1");
        if (u.n_samples < 1) throw DataError("make_batch: update with n_samples < 1");
        if (!u.delta.same_layout(updates.front().delta))
            throw StructuralError("make_batch: update layouts differ");
        total += u.n_samples;
    }

    AggregationBatch batch;
    batch.relative_sizes.reserve(updates.size());
    for (const auto& u : updates) {
        const double p = static_cast<double>(u.n_samples) / static_cast<double>(total);
        batch.relative_sizes.push_back(p);
        batch.tau_eff += p * static_cast<double>(u.tau);
    }
    batch.updates = std::move(updates);
    batch.prev_global_val = prev_global_val;
    return batch;
}

MomentumState make_momentum_state(LayoutPtr layout, double beta, double gamma) {
    if (beta < 0.0 || beta >= 1.0)
        throw ConfigError("momentum beta must be in [0, 1)");
    if (gamma <= 0.0) throw ConfigError("momentum gamma must be positive");
    return MomentumState{ParamVector::zeros(std::move(layout)), beta, gamma};
}

namespace {

std::vector<const ParamVector*> delta_ptrs(const AggregationBatch& batch) {
    std::vector<const ParamVector*> out;
    out.reserve(batch.updates.size());
    for (const auto& u : batch.updates) out.push_back(&u.delta);
    return out;
}

void require_batch(const AggregationBatch& batch, const char* op) {
    if (batch.updates.empty()) throw UsageError(std::string(op) + ": empty batch");
}

// dw = sum(p_i * delta_i), in collaborator-id order.
ParamVector average_delta(const AggregationBatch& batch) {
    const auto ptrs = delta_ptrs(batch);
    return weighted_sum(std::span<const ParamVector* const>(ptrs), batch.relative_sizes);
}

} // namespace

ParamVector fedavg(const ParamVector& global, const AggregationBatch& batch) {
    require_batch(batch, "fedavg");
    return axpy(-1.0, average_delta(batch), global);
}

ParamVector fednova(const ParamVector& global, const AggregationBatch& batch) {
    require_batch(batch, "fednova");
    std::vector<double> weights(batch.updates.size());
    for (std::size_t i = 0; i < batch.updates.size(); ++i) {
        if (batch.updates[i].tau < 1) throw DataError("fednova: tau must be >= 1");
        weights[i] = batch.relative_sizes[i] / static_cast<double>(batch.updates[i].tau);
    }
    const auto ptrs = delta_ptrs(batch);
    const ParamVector normalized =
        weighted_sum(std::span<const ParamVector* const>(ptrs), weights);
    return axpy(-batch.tau_eff, normalized, global);
}

ParamVector fednova_reduced(const ParamVector& global,
                            const std::vector<ParamVector>& deltas, double gamma) {
    if (deltas.empty()) throw UsageError("fednova_reduced: empty delta list");
    if (gamma <= 0.0) throw UsageError("fednova_reduced: gamma must be positive");
    const std::vector<double> ones(deltas.size(), 1.0);
    return axpy(-gamma, weighted_sum(deltas, ones), global);
}

ParamVector fedavgm(const ParamVector& global, const AggregationBatch& batch,
                    MomentumState& state) {
    require_batch(batch, "fedavgm");
    if (!state.velocity.same_layout(global))
        throw StructuralError("fedavgm: momentum state layout differs from global model");
    state.velocity = axpy(state.beta, state.velocity, average_delta(batch));
    return axpy(-state.gamma, state.velocity, global);
}

ParamVector median_aggregate(const ParamVector& global, const AggregationBatch& batch) {
    require_batch(batch, "median_aggregate");
    std::vector<ParamVector> models;
    models.reserve(batch.updates.size());
    for (const auto& u : batch.updates) models.push_back(axpy(-1.0, u.delta, global));
    return coordinate_median(models);
}

AggregationBatch improved_nodes_filter(const AggregationBatch& batch) {
    if (!batch.prev_global_val) return batch;
    std::vector<Update> survivors;
    for (const auto& u : batch.updates)
        if (u.val_metrics.mean_dice > *batch.prev_global_val) survivors.push_back(u);
    if (survivors.empty()) return batch; // aggregate everyone rather than stall
    return make_batch(std::move(survivors), batch.prev_global_val);
}

namespace {

class FedAvgAggregator final : public Aggregator {
public:
    ParamVector aggregate(const ParamVector& g, const AggregationBatch& b) override {
        return fedavg(g, b);
    }
};

class FedNovaAggregator final : public Aggregator {
public:
    ParamVector aggregate(const ParamVector& g, const AggregationBatch& b) override {
        return fednova(g, b);
    }
};

class FedNovaReducedAggregator final : public Aggregator {
public:
    explicit FedNovaReducedAggregator(double gamma) : gamma_(gamma) {}
    ParamVector aggregate(const ParamVector& g, const AggregationBatch& b) override {
        std::vector<ParamVector> deltas;
        deltas.reserve(b.updates.size());
        for (const auto& u : b.updates) deltas.push_back(u.delta);
        return fednova_reduced(g, deltas, gamma_);
    }

private:
    double gamma_;
};

class FedAvgMAggregator final : public Aggregator {
public:
    FedAvgMAggregator(LayoutPtr layout, double beta, double gamma)
        : state_(make_momentum_state(std::move(layout), beta, gamma)) {}
    ParamVector aggregate(const ParamVector& g, const AggregationBatch& b) override {
        return fedavgm(g, b, state_);
    }

private:
    MomentumState state_;
};

class MedianAggregator final : public Aggregator {
public:
    ParamVector aggregate(const ParamVector& g, const AggregationBatch& b) override {
        return median_aggregate(g, b);
    }
};

class ImprovedNodesAggregator final : public Aggregator {
public:
    explicit ImprovedNodesAggregator(std::unique_ptr<Aggregator> inner)
        : inner_(std::move(inner)) {}
    ParamVector aggregate(const ParamVector& g, const AggregationBatch& b) override {
        return inner_->aggregate(g, improved_nodes_filter(b));
    }

private:
    std::unique_ptr<Aggregator> inner_;
};

} // namespace

std::unique_ptr<Aggregator> make_aggregator(const std::string& name,
                                            const AggregatorParams& params,
                                            LayoutPtr layout) {
    if (name == "fedavg") return std::make_unique<FedAvgAggregator>();
    if (name == "fednova") return std::make_unique<FedNovaAggregator>();
    if (name == "fednova_reduced")
        return std::make_unique<FedNovaReducedAggregator>(params.gamma);
    if (name == "fedavgm")
        return std::make_unique<FedAvgMAggregator>(std::move(layout), params.beta, params.gamma);
    if (name == "median") return std::make_unique<MedianAggregator>();
    if (name == "fedavg+improved_nodes")
        return std::make_unique<ImprovedNodesAggregator>(std::make_unique<FedAvgAggregator>());
    if (name == "fedavgm+improved_nodes")
        return std::make_unique<ImprovedNodesAggregator>(std::make_unique<FedAvgMAggregator>(
            std::move(layout), params.beta, params.gamma));
    throw ConfigError("unknown aggregator '" + name + "'");
}

} // namespace fedsim
