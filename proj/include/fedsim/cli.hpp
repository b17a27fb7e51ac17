#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/engine.hpp"

namespace fedsim::cli {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2; // config or usage problem
inline constexpr int kExitDivergence = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> rounds;
    std::optional<int> workers;
};

// rounds.csv header, byte-exact.
extern const char* const kRoundsHeader;

// Formats one value with 6 significant digits ('.' decimal separator).
std::string format_g6(double v);

// One rounds.csv data row for the given log.
std::string rounds_csv_row(const RoundLog& log);

// Runs one experiment and writes rounds.csv, scan_metrics.csv, summary.csv
// and manifest.json into out_dir. On divergence the completed rounds are
// still flushed and kExitDivergence is returned.
int run_command(const std::string& config_path, const std::string& out_dir,
                const Overrides& overrides, std::ostream& err);

// Grid of aggregator x hyper cells sharing the experiment seed; writes each
// cell under out_dir/<aggregator>__<hyper>/ plus a comparison.csv. Failing
// cells are recorded and the sweep continues.
int sweep_command(const std::string& config_path,
                  const std::vector<std::string>& aggregators,
                  const std::vector<std::string>& hypers, const std::string& out_dir,
                  const Overrides& overrides, std::ostream& err);

// Per-metric summary table (mu, sigma, quartiles) from a
// scan_metrics.csv produced by run_command.
int summarize_command(const std::string& scan_metrics_csv, std::ostream& out,
                      std::ostream& err);

// Shard table of the configured partition as CSV.
int describe_partition_command(const std::string& config_path, std::ostream& out,
                               std::ostream& err);

// Two-column (time, metric) series extracted from a rounds.csv.
int plot_data_command(const std::string& rounds_csv, const std::string& metric,
                      std::ostream& out, std::ostream& err);

} // namespace fedsim::cli
