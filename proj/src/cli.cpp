#include "fedsim/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fedsim/config.hpp"
#include "fedsim/errors.hpp"

namespace fedsim::cli {

namespace fs = std::filesystem;

const char* const kRoundsHeader =
    "round,cum_time_s,round_time_s,lr,epochs,n_selected,agg_loss,mean_dice,"
    "dice_et,dice_tc,dice_wt,sens_et,sens_tc,sens_wt,spec_et,spec_tc,spec_wt,"
    "hd95_et,hd95_tc,hd95_wt";

namespace {

const char* const kScanMetricsHeader =
    "scan_id,collaborator_id,dice_et,dice_tc,dice_wt,sens_et,sens_tc,sens_wt,"
    "spec_et,spec_tc,spec_wt,hd95_et,hd95_tc,hd95_wt";

const char* const kSummaryHeader = "metric,mu,sigma,q1,q2,q3";

// Row order: Dice, Sensitivity, Specificity, Hausdorff95; ET, WT, TC.
const std::vector<std::pair<std::string, std::string>> kSummaryMetrics = {
    {"Dice_ET", "dice_et"},           {"Dice_WT", "dice_wt"},
    {"Dice_TC", "dice_tc"},           {"Sensitivity_ET", "sens_et"},
    {"Sensitivity_WT", "sens_wt"},    {"Sensitivity_TC", "sens_tc"},
    {"Specificity_ET", "spec_et"},    {"Specificity_WT", "spec_wt"},
    {"Specificity_TC", "spec_tc"},    {"Hausdorff95_ET", "hd95_et"},
    {"Hausdorff95_WT", "hd95_wt"},    {"Hausdorff95_TC", "hd95_tc"},
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Write-temp-then-rename so concurrent sweep cells never expose partial files.
void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << content;
    }
    fs::rename(tmp, path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string scan_metrics_csv(const std::vector<ScanMetricRow>& rows) {
    std::string out = std::string(kScanMetricsHeader) + "\n";
    for (const auto& r : rows) {
        const MetricRecord& m = r.record;
        out += std::to_string(r.scan_id) + "," + r.collaborator_id;
        for (double v : {m.dice_et, m.dice_tc, m.dice_wt, m.sens_et, m.sens_tc, m.sens_wt,
                         m.spec_et, m.spec_tc, m.spec_wt, m.hd95_et, m.hd95_tc, m.hd95_wt})
            out += "," + format_g6(v);
        out += "\n";
    }
    return out;
}

std::string summary_csv_from_columns(const std::map<std::string, std::vector<double>>& cols) {
    std::string out = std::string(kSummaryHeader) + "\n";
    for (const auto& [label, column] : kSummaryMetrics) {
        const auto it = cols.find(column);
        if (it == cols.end() || it->second.empty())
            throw DataError("summary: no values for metric column '" + column + "'");
        const SummaryStats s = summary_stats(it->second);
        out += label;
        for (double v : {s.mu, s.sigma, s.q1, s.q2, s.q3}) out += "," + format_g6(v);
        out += "\n";
    }
    return out;
}

std::map<std::string, std::vector<double>> columns_from_rows(
    const std::vector<ScanMetricRow>& rows) {
    std::map<std::string, std::vector<double>> cols;
    for (const auto& r : rows) {
        const MetricRecord& m = r.record;
        cols["dice_et"].push_back(m.dice_et);
        cols["dice_tc"].push_back(m.dice_tc);
        cols["dice_wt"].push_back(m.dice_wt);
        cols["sens_et"].push_back(m.sens_et);
        cols["sens_tc"].push_back(m.sens_tc);
        cols["sens_wt"].push_back(m.sens_wt);
        cols["spec_et"].push_back(m.spec_et);
        cols["spec_tc"].push_back(m.spec_tc);
        cols["spec_wt"].push_back(m.spec_wt);
        cols["hd95_et"].push_back(m.hd95_et);
        cols["hd95_tc"].push_back(m.hd95_tc);
        cols["hd95_wt"].push_back(m.hd95_wt);
    }
    return cols;
}

struct RunArtifacts {
    std::vector<RoundLog> logs;
    std::vector<ScanMetricRow> scan_metrics;
    double convergence = 0.0;
    bool diverged = false;
    std::string divergence_message;
};

RunArtifacts execute(const ExperimentConfig& cfg) {
    Engine engine(cfg);
    RunArtifacts art;
    try {
        engine.run();
    } catch (const DivergenceError& e) {
        art.diverged = true;
        art.divergence_message = e.what();
    }
    art.logs = engine.result().logs;
    art.scan_metrics = engine.result().final_scan_metrics;
    if (!art.logs.empty()) art.convergence = convergence_score(art.logs);
    return art;
}

void write_run_outputs(const fs::path& dir, const RunArtifacts& art,
                       const std::string& cfg_hash, std::uint64_t seed,
                       const std::string& cell) {
    fs::create_directories(dir);

    std::string rounds = std::string(kRoundsHeader) + "\n";
    for (const auto& log : art.logs) rounds += rounds_csv_row(log);
    atomic_write(dir / "rounds.csv", rounds);
    atomic_write(dir / "scan_metrics.csv", scan_metrics_csv(art.scan_metrics));
    if (!art.scan_metrics.empty())
        atomic_write(dir / "summary.csv",
                     summary_csv_from_columns(columns_from_rows(art.scan_metrics)));

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["config_hash"] = cfg_hash;
    manifest["seed"] = seed;
    manifest["rounds_completed"] = art.logs.size();
    manifest["sim_time_start_s"] = 0.0;
    manifest["sim_time_end_s"] = art.logs.empty() ? 0.0 : art.logs.back().cum_time;
    manifest["convergence_score"] = art.convergence;
    manifest["diverged"] = art.diverged;
    manifest["outputs"] = {"rounds.csv", "scan_metrics.csv", "summary.csv"};
    if (!cell.empty()) manifest["cell"] = cell;
    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.rounds) cfg.rounds = *o.rounds;
    if (o.workers) cfg.workers = *o.workers;
}

int report(std::ostream& err, const std::exception& e, int code) {
    err << "error: " << e.what() << "\n";
    return code;
}

} // namespace

std::string format_g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
}

std::string rounds_csv_row(const RoundLog& log) {
    const MetricRecord& m = log.agg_metrics;
    std::string row = std::to_string(log.round);
    for (double v : {log.cum_time, log.round_time, log.hyper.lr}) row += "," + format_g6(v);
    row += "," + std::to_string(log.hyper.epochs_per_round);
    row += "," + std::to_string(log.selected.size());
    for (double v : {log.agg_loss, m.mean_dice, m.dice_et, m.dice_tc, m.dice_wt,
                     m.sens_et, m.sens_tc, m.sens_wt, m.spec_et, m.spec_tc, m.spec_wt,
                     m.hd95_et, m.hd95_tc, m.hd95_wt})
        row += "," + format_g6(v);
    row += "\n";
    return row;
}

int run_command(const std::string& config_path, const std::string& out_dir,
                const Overrides& overrides, std::ostream& err) {
    try {
        const std::string text = slurp(config_path);
        ExperimentConfig cfg = parse_config(text);
        apply_overrides(cfg, overrides);

        std::string dir = out_dir.empty() ? config_output_dir(text) : out_dir;
        if (dir.empty())
            throw ConfigError("no output directory: pass --out or set output.dir");

        const RunArtifacts art = execute(cfg);
        write_run_outputs(dir, art, config_hash(text), cfg.seed, "");
        if (art.diverged) {
            err << "error: " << art.divergence_message << "\n";
            return kExitDivergence;
        }
        return kExitOk;
    } catch (const DivergenceError& e) {
        return report(err, e, kExitDivergence);
    } catch (const Error& e) {
        return report(err, e, kExitConfig);
    }
}

int sweep_command(const std::string& config_path,
                  const std::vector<std::string>& aggregators,
                  const std::vector<std::string>& hypers, const std::string& out_dir,
                  const Overrides& overrides, std::ostream& err) {
    try {
        const std::string text = slurp(config_path);
        ExperimentConfig base = parse_config(text);
        apply_overrides(base, overrides);
        if (aggregators.empty() || hypers.empty())
            throw ConfigError("sweep: empty aggregator or hyper axis");
        std::string dir = out_dir.empty() ? config_output_dir(text) : out_dir;
        if (dir.empty())
            throw ConfigError("no output directory: pass --out or set output.dir");

        // Validate both axes up front so a typo fails the whole sweep.
        for (const auto& a : aggregators)
            make_aggregator(a, base.aggregator_params, MlpModel::layout(2));
        for (const auto& h : hypers) make_hyper_policy(h, base.hyper_params);

        const std::string hash = config_hash(text);
        std::string comparison = "aggregator,hyper,final_mean_dice,convergence_score\n";
        int failures = 0;
        for (const auto& agg : aggregators) {
            for (const auto& hyp : hypers) {
                ExperimentConfig cfg = base;
                cfg.aggregator = agg;
                cfg.hyper = hyp;
                const std::string cell = agg + "__" + hyp;
                try {
                    const RunArtifacts art = execute(cfg);
                    write_run_outputs(fs::path(dir) / cell, art, hash, cfg.seed, cell);
                    if (art.diverged) {
                        ++failures;
                        err << "cell " << cell << " failed: " << art.divergence_message
                            << "\n";
                        continue;
                    }
                    comparison += agg + "," + hyp + "," +
                                  format_g6(art.logs.back().agg_metrics.mean_dice) + "," +
                                  format_g6(art.convergence) + "\n";
                } catch (const Error& e) {
                    ++failures;
                    err << "cell " << cell << " failed: " << e.what() << "\n";
                }
            }
        }
        fs::create_directories(dir);
        atomic_write(fs::path(dir) / "comparison.csv", comparison);
        return failures == 0 ? kExitOk : kExitDivergence;
    } catch (const Error& e) {
        return report(err, e, kExitConfig);
    }
}

int summarize_command(const std::string& scan_metrics_csv, std::ostream& out,
                      std::ostream& err) {
    try {
        std::istringstream in(slurp(scan_metrics_csv));
        std::string line;
        if (!std::getline(in, line))
            throw DataError("malformed CSV at line 1: empty file");
        const auto header = split_csv_line(line);

        std::map<std::string, std::size_t> col_index;
        for (std::size_t i = 0; i < header.size(); ++i) col_index[header[i]] = i;
        for (const auto& [label, column] : kSummaryMetrics) {
            (void)label;
            if (!col_index.count(column))
                throw DataError("malformed CSV at line 1: missing column '" + column + "'");
        }

        std::map<std::string, std::vector<double>> cols;
        int line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (fields.size() != header.size())
                throw DataError("malformed CSV at line " + std::to_string(line_no) +
                                ": expected " + std::to_string(header.size()) + " fields");
            for (const auto& [label, column] : kSummaryMetrics) {
                (void)label;
                const std::string& raw = fields[col_index[column]];
                try {
                    cols[column].push_back(std::stod(raw));
                } catch (const std::exception&) {
                    throw DataError("malformed CSV at line " + std::to_string(line_no) +
                                    ": bad number '" + raw + "'");
                }
            }
        }
        if (cols.empty())
            throw DataError("malformed CSV at line " + std::to_string(line_no) +
                            ": no data rows");
        out << summary_csv_from_columns(cols);
        return kExitOk;
    } catch (const Error& e) {
        return report(err, e, kExitConfig);
    }
}

int describe_partition_command(const std::string& config_path, std::ostream& out,
                               std::ostream& err) {
    try {
        const ExperimentConfig cfg = load_config_file(config_path);
        const auto dataset = generate_dataset(cfg.seed, cfg.dataset);
        const auto shards = build_shards(dataset, cfg.partition,
                                         derive_seed(cfg.seed, fnv1a64("partition")));
        out << "collaborator_id,n_train,n_val,pct\n";
        for (const auto& s : shards) {
            const double pct =
                100.0 * static_cast<double>(s.total()) / static_cast<double>(dataset.size());
            out << s.collaborator_id << "," << s.train.size() << "," << s.validation.size()
                << "," << format_g6(pct) << "\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        return report(err, e, kExitConfig);
    }
}

int plot_data_command(const std::string& rounds_csv, const std::string& metric,
                      std::ostream& out, std::ostream& err) {
    try {
        std::istringstream in(slurp(rounds_csv));
        std::string line;
        if (!std::getline(in, line))
            throw DataError("malformed CSV at line 1: empty file");
        const auto header = split_csv_line(line);
        std::size_t time_col = header.size(), metric_col = header.size();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == "cum_time_s") time_col = i;
            if (header[i] == metric) metric_col = i;
        }
        if (time_col == header.size())
            throw DataError("malformed CSV at line 1: missing column 'cum_time_s'");
        if (metric_col == header.size())
            throw ConfigError("unknown metric '" + metric + "'");

        int line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (fields.size() != header.size())
                throw DataError("malformed CSV at line " + std::to_string(line_no));
            out << fields[time_col] << "," << fields[metric_col] << "\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        return report(err, e, kExitConfig);
    }
}

} // namespace fedsim::cli
