#include "fedsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

// Runs fn(0..count-1) on up to `workers` threads. Each index writes only its
// own output slot, so results are identical for any worker count.
void parallel_for_index(std::size_t count, int workers,
                        const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    const int n_threads = std::min<int>(workers, static_cast<int>(count));
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace

double simulate_round_time(double speed_factor, long tau, const TimeModel& tm) {
    if (tau < 1) throw UsageError("simulate_round_time: tau must be >= 1");
    if (speed_factor <= 0.0 || tm.comm_overhead <= 0.0 || tm.step_cost <= 0.0 ||
        tm.agg_cost <= 0.0)
        throw ConfigError("simulate_round_time: time-model components must be positive");
    return tm.comm_overhead + tm.step_cost * static_cast<double>(tau) / speed_factor;
}

double convergence_score(const std::vector<RoundLog>& logs) {
    if (logs.empty()) throw UsageError("convergence_score: no rounds logged");
    if (logs.size() == 1) return logs.front().agg_metrics.mean_dice;

    const double t0 = logs.front().cum_time;
    const double span = logs.back().cum_time - t0;
    if (span <= 0.0) throw UsageError("convergence_score: round times must increase");

    double area = 0.0;
    for (std::size_t i = 1; i < logs.size(); ++i) {
        const double x0 = (logs[i - 1].cum_time - t0) / span;
        const double x1 = (logs[i].cum_time - t0) / span;
        const double y0 = logs[i - 1].agg_metrics.mean_dice;
        const double y1 = logs[i].agg_metrics.mean_dice;
        area += 0.5 * (y0 + y1) * (x1 - x0);
    }
    return area;
}

std::vector<Scan> generate_dataset(std::uint64_t seed, const DatasetParams& params) {
    if (params.n_scans == 0) throw ConfigError("dataset: n_scans must be positive");
    std::vector<Scan> scans;
    scans.reserve(params.n_scans);
    for (std::size_t i = 0; i < params.n_scans; ++i) {
        Scan s = generate_scan(derive_seed(seed, fnv1a64("scan"), i), params.scan);
        s.id = static_cast<int>(i);
        scans.push_back(std::move(s));
    }
    return scans;
}

Engine::Engine(const ExperimentConfig& config)
    : cfg_(config),
      dataset_(generate_dataset(config.seed, config.dataset)),
      shards_(build_shards(dataset_, config.partition,
                           derive_seed(config.seed, fnv1a64("partition")))),
      global_(MlpModel::init(derive_seed(config.seed, fnv1a64("model_init")),
                             config.dataset.hidden_width)) {
    if (cfg_.rounds < 1) throw ConfigError("rounds must be >= 1");
    if (cfg_.workers < 1) throw ConfigError("workers must be >= 1");
    if (cfg_.speed_spread < 1.0) throw ConfigError("speed_spread must be >= 1");

    aggregator_ = make_aggregator(cfg_.aggregator, cfg_.aggregator_params,
                                  global_.params().layout());
    hyper_ = make_hyper_policy(cfg_.hyper, cfg_.hyper_params);

    const std::size_t m = shards_.size();
    collaborators_.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        Collaborator c;
        c.id = shards_[i].collaborator_id;
        c.shard = &shards_[i];
        for (const Scan& s : shards_[i].train) c.train_ptrs.push_back(&s);
        for (const Scan& s : shards_[i].validation) c.val_ptrs.push_back(&s);

        if (cfg_.speed_spread > 1.0 && m > 1) {
            const double pos = static_cast<double>(i) / static_cast<double>(m - 1);
            c.speed_factor = std::pow(cfg_.speed_spread, 2.0 * pos - 1.0);
        }
        if (const auto it = cfg_.speed_factors.find(c.id); it != cfg_.speed_factors.end()) {
            if (it->second <= 0.0) throw ConfigError("speed factor must be positive");
            c.speed_factor = it->second;
        }
        collaborator_index_[c.id] = i;
        collaborators_.push_back(std::move(c));
    }
    for (const auto& [id, factor] : cfg_.speed_factors)
        if (!collaborator_index_.count(id))
            throw ConfigError("speed factor for unknown collaborator '" + id + "'");
}

std::vector<std::string> Engine::select(int round) {
    std::vector<std::string> pool;
    pool.reserve(collaborators_.size());
    for (const auto& c : collaborators_) pool.push_back(c.id);

    const auto& sel = cfg_.selector;
    if (sel.name == "all") return select_all(pool);
    if (sel.name == "random_subset") {
        const int k = sel.k.value_or(static_cast<int>((pool.size() + 1) / 2));
        Rng rng(derive_seed(cfg_.seed, fnv1a64("select"), static_cast<std::uint64_t>(round)));
        return select_random_subset(pool, k, rng);
    }
    if (sel.name == "faster_than_random") {
        Rng rng(derive_seed(cfg_.seed, fnv1a64("select"), static_cast<std::uint64_t>(round)));
        return select_faster_than_random(pool, time_history_, round, rng);
    }
    throw ConfigError("unknown selector '" + sel.name + "'");
}

void Engine::evaluate_pooled(const MlpModel& model, MetricRecord& out,
                             std::vector<ScanMetricRow>& rows) const {
    rows.clear();
    std::vector<MetricRecord> records;
    for (const auto& c : collaborators_) {
        for (const Scan* scan : c.val_ptrs) {
            ScanMetricRow row;
            row.scan_id = scan->id;
            row.collaborator_id = c.id;
            row.record = evaluate_scan(model, *scan);
            records.push_back(row.record);
            rows.push_back(std::move(row));
        }
    }
    out = mean_records(records);
}

RoundLog Engine::run_round() {
    const int round = round_;
    const HyperDecision hyper = hyper_->decide(round);
    const std::vector<std::string> selected = select(round);

    TrainConfig tc;
    tc.lr = hyper.lr;
    tc.epochs = hyper.epochs_per_round;
    tc.batch_size = cfg_.dataset.batch_size;
    tc.pixels_per_scan = cfg_.dataset.pixels_per_scan;

    // Per-collaborator training jobs; RNG streams keyed by (seed, id, round),
    // results land in indexed slots, so scheduling order cannot matter.
    std::vector<Update> updates(selected.size());
    try {
        parallel_for_index(selected.size(), cfg_.workers, [&](std::size_t i) {
            const Collaborator& c = collaborators_[collaborator_index_.at(selected[i])];
            const std::uint64_t stream = derive_seed(
                cfg_.seed, fnv1a64("train"), fnv1a64(c.id), static_cast<std::uint64_t>(round));
            Update u = local_train(global_, c.train_ptrs, tc, stream, c.id);
            // Local validation of the post-training model x_start - delta.
            const MlpModel local(axpy(-1.0, u.delta, global_.params()));
            const auto recs = evaluate_scans(local, c.val_ptrs);
            u.val_metrics = mean_records(recs);
            updates[i] = std::move(u);
        });
    } catch (const DivergenceError& e) {
        throw DivergenceError(e.collaborator_id(), round,
                              std::string(e.what()) + " (round " + std::to_string(round) + ")");
    }

    RoundLog log;
    log.round = round;
    log.selected = selected;
    log.hyper = hyper;

    double round_time = 0.0;
    double loss_weighted = 0.0;
    long loss_samples = 0;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        const Collaborator& c = collaborators_[collaborator_index_.at(selected[i])];
        const double t = simulate_round_time(c.speed_factor, updates[i].tau, cfg_.time_model);
        time_history_.record(c.id, round, t);
        round_time = std::max(round_time, t);
        loss_weighted += static_cast<double>(updates[i].n_samples) * updates[i].train_loss;
        loss_samples += updates[i].n_samples;
        log.collaborators.push_back(
            CollaboratorRoundStats{c.id, updates[i].train_loss, updates[i].tau, t});
    }
    log.agg_loss = loss_weighted / static_cast<double>(loss_samples);
    round_time += cfg_.time_model.agg_cost;

    const AggregationBatch batch = make_batch(std::move(updates), prev_global_mean_dice_);
    global_ = MlpModel(aggregator_->aggregate(global_.params(), batch));

    evaluate_pooled(global_, log.agg_metrics, result_.final_scan_metrics);

    cum_time_ += round_time;
    log.round_time = round_time;
    log.cum_time = cum_time_;

    hyper_->observe(round, log.agg_metrics.mean_dice, log.agg_loss);
    prev_global_mean_dice_ = log.agg_metrics.mean_dice;

    ++round_;
    result_.logs.push_back(log);
    return log;
}

ExperimentResult Engine::run() {
    while (round_ < cfg_.rounds) run_round();
    result_.convergence_score = convergence_score(result_.logs);
    return result_;
}

} // namespace fedsim
