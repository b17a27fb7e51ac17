#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/hyper.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/selection.hpp"
#include "fedsim/synth_task.hpp"

namespace fedsim {

// Simulated wall clock: a round costs communication overhead plus compute
// time proportional to the SGD steps taken, divided by the collaborator's
// speed factor; aggregation adds a fixed cost at the barrier.
struct TimeModel {
    double comm_overhead = 1.0; // seconds per round per collaborator
    double step_cost = 0.01;    // seconds per SGD step
    double agg_cost = 0.1;      // seconds per aggregation barrier
};

double simulate_round_time(double speed_factor, long tau, const TimeModel& tm);

struct DatasetParams {
    std::size_t n_scans = 341;
    ScanParams scan;
    int pixels_per_scan = 64;
    int batch_size = 8;
    int hidden_width = 16;
};

struct SelectorParams {
    std::string name = "all";
    std::optional<int> k; // random_subset size; default ceil(pool/2)
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    int rounds = 70;
    DatasetParams dataset;
    PartitionSpec partition;
    std::string aggregator = "fedavg";
    AggregatorParams aggregator_params;
    SelectorParams selector;
    std::string hyper = "constant";
    HyperParams hyper_params;
    TimeModel time_model;
    // speed_spread > 1 assigns log-spaced speed factors across the sorted
    // collaborator ids; explicit per-id factors win over the spread.
    double speed_spread = 1.0;
    std::map<std::string, double> speed_factors;
    int workers = 1;
};

struct CollaboratorRoundStats {
    std::string id;
    double train_loss = 0.0;
    long tau = 0;
    double round_time = 0.0;
};

struct RoundLog {
    int round = 0;
    std::vector<std::string> selected;
    HyperDecision hyper;
    std::vector<CollaboratorRoundStats> collaborators;
    MetricRecord agg_metrics; // aggregated model on the pooled validation set
    double agg_loss = 0.0;    // sample-weighted mean of reported train losses
    double round_time = 0.0;
    double cum_time = 0.0;
};

struct ScanMetricRow {
    int scan_id = 0;
    std::string collaborator_id;
    MetricRecord record;
};

struct ExperimentResult {
    std::vector<RoundLog> logs;
    std::vector<ScanMetricRow> final_scan_metrics; // last round, pooled validation
    double convergence_score = 0.0;
};

// Trapezoidal area under (time, mean Dice) with time mapped onto [0, 1]
// between the first and last logged rounds. A single round scores its own
// mean Dice. Invariant under uniform rescaling of all round times.
double convergence_score(const std::vector<RoundLog>& logs);

class Engine {
public:
    explicit Engine(const ExperimentConfig& config);

    // Runs one round: select, train, aggregate, evaluate, update hyper state.
    RoundLog run_round();

    // Runs the configured number of rounds. On divergence the partial logs
    // are preserved in result() and the error is rethrown.
    ExperimentResult run();

    const ExperimentResult& result() const { return result_; }
    const ParamVector& global_model() const { return global_.params(); }
    const std::vector<Shard>& shards() const { return shards_; }
    int rounds_completed() const { return round_; }

private:
    struct Collaborator {
        std::string id;
        const Shard* shard;
        double speed_factor = 1.0;
        std::vector<const Scan*> train_ptrs;
        std::vector<const Scan*> val_ptrs;
    };

    std::vector<std::string> select(int round);
    void evaluate_pooled(const MlpModel& model, MetricRecord& out,
                         std::vector<ScanMetricRow>& rows) const;

    ExperimentConfig cfg_;
    std::vector<Scan> dataset_;
    std::vector<Shard> shards_;
    std::vector<Collaborator> collaborators_;
    std::map<std::string, std::size_t> collaborator_index_;
    MlpModel global_;
    std::unique_ptr<Aggregator> aggregator_;
    std::unique_ptr<HyperPolicy> hyper_;
    TimeHistory time_history_;
    std::optional<double> prev_global_mean_dice_;
    double cum_time_ = 0.0;
    int round_ = 0;
    ExperimentResult result_;
};

// Generates the dataset exactly as the engine does; exposed for tests and the
// describe-partition command.
std::vector<Scan> generate_dataset(std::uint64_t seed, const DatasetParams& params);

} // namespace fedsim
