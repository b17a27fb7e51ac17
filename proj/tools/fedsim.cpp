#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsim/cli.hpp"

namespace {

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// --workers wins; FEDSIM_WORKERS is the fallback.
std::optional<int> workers_from_env() {
    if (const char* env = std::getenv("FEDSIM_WORKERS")) {
        try {
            return std::stoi(env);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic federated-learning simulation on a synthetic "
                 "segmentation task"};
    app.set_version_flag("--version", fedsim::cli::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string csv_path;
    std::string metric = "mean_dice";
    std::string aggregators = "fedavg,fednova,fedavgm";
    std::string hypers = "constant,lr_plateau,adaptive_epoch,adaptive_epoch+lr_plateau";
    std::optional<std::uint64_t> seed;
    std::optional<int> rounds;
    std::optional<int> workers;

    auto* run = app.add_subcommand("run", "Run a single experiment");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--seed", seed, "Override the experiment seed");
    run->add_option("--rounds", rounds, "Override the round budget");
    run->add_option("--workers", workers, "Training worker threads");

    auto* sweep = app.add_subcommand("sweep", "Run an aggregator x hyper grid");
    sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sweep->add_option("--out", out_dir, "Output directory");
    sweep->add_option("--aggregators", aggregators, "Comma-separated aggregator axis");
    sweep->add_option("--hypers", hypers, "Comma-separated hyper-policy axis");
    sweep->add_option("--seed", seed, "Override the experiment seed");
    sweep->add_option("--rounds", rounds, "Override the round budget");
    sweep->add_option("--workers", workers, "Training worker threads");

    auto* summarize = app.add_subcommand("summarize", "Summary stats from scan_metrics.csv");
    summarize->add_option("csv", csv_path, "scan_metrics.csv from a run")->required();

    auto* describe = app.add_subcommand("describe-partition", "Print the shard table");
    describe->add_option("--config", config_path, "Experiment config (JSON)")->required();

    auto* plot = app.add_subcommand("plot-data", "Two-column (time, metric) series");
    plot->add_option("csv", csv_path, "rounds.csv from a run")->required();
    plot->add_option("--metric", metric, "Column to extract (default mean_dice)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : fedsim::cli::kExitConfig;
    }

    fedsim::cli::Overrides overrides;
    overrides.seed = seed;
    overrides.rounds = rounds;
    overrides.workers = workers ? workers : workers_from_env();

    if (run->parsed())
        return fedsim::cli::run_command(config_path, out_dir, overrides, std::cerr);
    if (sweep->parsed())
        return fedsim::cli::sweep_command(config_path, split_list(aggregators),
                                          split_list(hypers), out_dir, overrides,
                                          std::cerr);
    if (summarize->parsed())
        return fedsim::cli::summarize_command(csv_path, std::cout, std::cerr);
    if (describe->parsed())
        return fedsim::cli::describe_partition_command(config_path, std::cout, std::cerr);
    if (plot->parsed())
        return fedsim::cli::plot_data_command(csv_path, metric, std::cout, std::cerr);
    return fedsim::cli::kExitConfig;
}
