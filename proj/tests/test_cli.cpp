#include <doctest.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedsim/cli.hpp"
#include "fedsim/config.hpp"
#include "fedsim/errors.hpp"

using namespace fedsim;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "seed": 11,
  "rounds": 2,
  "dataset": {"n_scans": 12, "grid_size": 16, "mean_radius": 4.0, "radius_spread": 1.0,
              "pixels_per_scan": 16, "batch_size": 8},
  "partition": {"proportions": [0.4, 0.35, 0.25]},
  "aggregator": "fedavg",
  "selector": "all",
  "hyper": "constant"
})";

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p.string();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("run writes the expected artifacts") {
    TempDir dir("fedsim_cli_run");
    const auto cfg = write_file(dir.path / "cfg.json", kTinyConfig);
    std::ostringstream err;

    const int rc = cli::run_command(cfg, (dir.path / "out").string(), {}, err);
    CHECK(rc == cli::kExitOk);
    INFO(err.str());

    const std::string rounds = read_file(dir.path / "out" / "rounds.csv");
    CHECK(rounds.rfind(std::string(cli::kRoundsHeader) + "\n", 0) == 0);
    CHECK(count_lines(rounds) == 1 + 2); // header + one row per round

    CHECK(fs::exists(dir.path / "out" / "scan_metrics.csv"));
    CHECK(fs::exists(dir.path / "out" / "summary.csv"));
    CHECK(fs::exists(dir.path / "out" / "manifest.json"));

    const std::string summary = read_file(dir.path / "out" / "summary.csv");
    CHECK(summary.rfind("metric,mu,sigma,q1,q2,q3\n", 0) == 0);
    CHECK(summary.find("Dice_ET,") != std::string::npos);
    CHECK(summary.find("Hausdorff95_TC,") != std::string::npos);
    CHECK(count_lines(summary) == 1 + 12);
}

TEST_CASE("run is deterministic and the seed override changes outputs") {
    TempDir dir("fedsim_cli_seed");
    const auto cfg = write_file(dir.path / "cfg.json", kTinyConfig);
    std::ostringstream err;

    cli::Overrides with_seed;
    with_seed.seed = 99;
    CHECK(cli::run_command(cfg, (dir.path / "a").string(), with_seed, err) == 0);
    CHECK(cli::run_command(cfg, (dir.path / "b").string(), with_seed, err) == 0);
    CHECK(cli::run_command(cfg, (dir.path / "c").string(), {}, err) == 0);

    const auto a = read_file(dir.path / "a" / "rounds.csv");
    const auto b = read_file(dir.path / "b" / "rounds.csv");
    const auto c = read_file(dir.path / "c" / "rounds.csv");
    CHECK(a == b);  // same override twice: identical bytes
    CHECK(a != c);  // different seed: different outputs
}

TEST_CASE("config errors name the offender and exit 2") {
    TempDir dir("fedsim_cli_err");
    std::ostringstream err;

    // missing file
    CHECK(cli::run_command((dir.path / "nope.json").string(), dir.str(), {}, err) ==
          cli::kExitConfig);

    // unknown aggregator
    std::string bad = kTinyConfig;
    bad.replace(bad.find("fedavg"), 6, "krum42");
    const auto bad_path = write_file(dir.path / "bad.json", bad);
    std::ostringstream err2;
    CHECK(cli::run_command(bad_path, dir.str(), {}, err2) == cli::kExitConfig);
    CHECK(err2.str().find("krum42") != std::string::npos);

    // unknown top-level key
    std::string typo = kTinyConfig;
    typo.replace(typo.find("\"selector\""), 10, "\"selectors\"");
    const auto typo_path = write_file(dir.path / "typo.json", typo);
    std::ostringstream err3;
    CHECK(cli::run_command(typo_path, dir.str(), {}, err3) == cli::kExitConfig);
    CHECK(err3.str().find("selectors") != std::string::npos);
}

TEST_CASE("config hash is stable under key reordering and comments") {
    const std::string a = R"({"seed": 1, "rounds": 2})";
    const std::string b = "// a comment\n{\"rounds\": 2, \"seed\": 1}\n";
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(R"({"seed": 2, "rounds": 2})"));

    // comments parse cleanly into configs too
    const auto cfg = parse_config("{\"seed\": 5 /* inline */, \"rounds\": 3}");
    CHECK(cfg.seed == 5);
    CHECK(cfg.rounds == 3);
}

TEST_CASE("sweep produces one comparison row per cell") {
    TempDir dir("fedsim_cli_sweep");
    const auto cfg = write_file(dir.path / "cfg.json", kTinyConfig);
    std::ostringstream err;

    const int rc = cli::sweep_command(cfg, {"fedavg", "fedavgm"},
                                      {"constant", "adaptive_epoch"},
                                      (dir.path / "out").string(), {}, err);
    CHECK(rc == cli::kExitOk);
    const std::string cmp = read_file(dir.path / "out" / "comparison.csv");
    CHECK(cmp.rfind("aggregator,hyper,final_mean_dice,convergence_score\n", 0) == 0);
    CHECK(count_lines(cmp) == 1 + 4);
    CHECK(fs::exists(dir.path / "out" / "fedavg__constant" / "rounds.csv"));
    CHECK(fs::exists(dir.path / "out" / "fedavgm__adaptive_epoch" / "manifest.json"));

    // a 1x1 sweep reproduces the single-run outputs byte for byte
    std::ostringstream err2;
    CHECK(cli::run_command(cfg, (dir.path / "single").string(), {}, err2) == 0);
    CHECK(read_file(dir.path / "out" / "fedavg__constant" / "rounds.csv") ==
          read_file(dir.path / "single" / "rounds.csv"));

    // invalid axis value fails up front
    std::ostringstream err3;
    CHECK(cli::sweep_command(cfg, {"fedavg", "bogus"}, {"constant"},
                             (dir.path / "out2").string(), {}, err3) == cli::kExitConfig);
    CHECK(err3.str().find("bogus") != std::string::npos);
}

TEST_CASE("sweep covers the full 3x4 strategy grid") {
    TempDir dir("fedsim_cli_grid");
    const auto cfg = write_file(dir.path / "cfg.json", kTinyConfig);
    std::ostringstream err;

    cli::Overrides quick;
    quick.rounds = 1;
    const int rc = cli::sweep_command(
        cfg, {"fedavg", "fednova", "fedavgm"},
        {"constant", "lr_plateau", "adaptive_epoch", "adaptive_epoch+lr_plateau"},
        (dir.path / "out").string(), quick, err);
    CHECK(rc == cli::kExitOk);
    const std::string cmp = read_file(dir.path / "out" / "comparison.csv");
    CHECK(count_lines(cmp) == 1 + 12);

    // cells share the experiment seed, so fedavg and fedavgm (zero initial
    // velocity, gamma=1) produce identical first rounds
    CHECK(read_file(dir.path / "out" / "fedavg__constant" / "rounds.csv") ==
          read_file(dir.path / "out" / "fedavgm__constant" / "rounds.csv"));
}

TEST_CASE("summarize: closed-form quartiles and malformed input") {
    TempDir dir("fedsim_cli_summarize");

    // five-value arithmetic sequence in every column
    std::string csv =
        "scan_id,collaborator_id,dice_et,dice_tc,dice_wt,sens_et,sens_tc,sens_wt,"
        "spec_et,spec_tc,spec_wt,hd95_et,hd95_tc,hd95_wt\n";
    for (int i = 1; i <= 5; ++i) {
        const std::string v = cli::format_g6(i * 0.1);
        csv += std::to_string(i) + ",inst01";
        for (int c = 0; c < 12; ++c) csv += "," + v;
        csv += "\n";
    }
    const auto path = write_file(dir.path / "scan_metrics.csv", csv);

    std::ostringstream out, err;
    CHECK(cli::summarize_command(path, out, err) == cli::kExitOk);
    const std::string got = out.str();
    CHECK(got.find("Dice_ET,0.3,") != std::string::npos);       // mean of 0.1..0.5
    CHECK(got.find(",0.2,0.3,0.4\n") != std::string::npos);     // Q1,Q2,Q3

    // single row: mu equals the value, sigma 0
    std::string one =
        "scan_id,collaborator_id,dice_et,dice_tc,dice_wt,sens_et,sens_tc,sens_wt,"
        "spec_et,spec_tc,spec_wt,hd95_et,hd95_tc,hd95_wt\n1,inst01";
    for (int c = 0; c < 12; ++c) one += ",0.7";
    one += "\n";
    const auto one_path = write_file(dir.path / "one.csv", one);
    std::ostringstream out2, err2;
    CHECK(cli::summarize_command(one_path, out2, err2) == cli::kExitOk);
    CHECK(out2.str().find("Dice_ET,0.7,0,0.7,0.7,0.7\n") != std::string::npos);

    // malformed row reports its line number
    const auto broken = write_file(dir.path / "broken.csv", csv + "1,2,3\n");
    std::ostringstream out3, err3;
    CHECK(cli::summarize_command(broken, out3, err3) == cli::kExitConfig);
    CHECK(err3.str().find("line 7") != std::string::npos);
}

TEST_CASE("divergence exits with code 3 and still flushes the logs") {
    TempDir dir("fedsim_cli_diverge");
    std::string cfg_text = kTinyConfig;
    cfg_text.replace(cfg_text.find("\"radius_spread\": 1.0"), 20,
                     "\"radius_spread\": 1.0, \"noise_sigma\": 1e308");
    const auto cfg = write_file(dir.path / "cfg.json", cfg_text);

    std::ostringstream err;
    CHECK(cli::run_command(cfg, (dir.path / "out").string(), {}, err) ==
          cli::kExitDivergence);
    // completed rounds (none here) are still written
    const std::string rounds = read_file(dir.path / "out" / "rounds.csv");
    CHECK(rounds == std::string(cli::kRoundsHeader) + "\n");
    CHECK(fs::exists(dir.path / "out" / "manifest.json"));

    // a sweep records the failing cells and keeps going
    std::ostringstream err2;
    CHECK(cli::sweep_command(cfg, {"fedavg"}, {"constant", "adaptive_epoch"},
                             (dir.path / "sweep").string(), {}, err2) ==
          cli::kExitDivergence);
    const std::string cmp = read_file(dir.path / "sweep" / "comparison.csv");
    CHECK(count_lines(cmp) == 1); // header only, both cells failed
    CHECK(err2.str().find("fedavg__constant") != std::string::npos);
    CHECK(err2.str().find("fedavg__adaptive_epoch") != std::string::npos);
}

TEST_CASE("describe-partition prints the shard table") {
    TempDir dir("fedsim_cli_part");
    const auto cfg = write_file(dir.path / "cfg.json", kTinyConfig);
    std::ostringstream out, err;
    CHECK(cli::describe_partition_command(cfg, out, err) == cli::kExitOk);
    const std::string table = out.str();
    CHECK(table.rfind("collaborator_id,n_train,n_val,pct\n", 0) == 0);
    CHECK(count_lines(table) == 1 + 3);
    CHECK(table.find("inst01,") != std::string::npos);
}

TEST_CASE("plot-data extracts a (time, metric) series") {
    TempDir dir("fedsim_cli_plot");
    const auto cfg = write_file(dir.path / "cfg.json", kTinyConfig);
    std::ostringstream err;
    REQUIRE(cli::run_command(cfg, (dir.path / "out").string(), {}, err) == 0);

    std::ostringstream out, err2;
    CHECK(cli::plot_data_command((dir.path / "out" / "rounds.csv").string(), "mean_dice",
                                 out, err2) == cli::kExitOk);
    CHECK(count_lines(out.str()) == 2); // one line per round
    for (const char c : out.str())
        CHECK((std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == ',' ||
               c == '\n' || c == '-' || c == 'e' || c == '+'));

    std::ostringstream out3, err3;
    CHECK(cli::plot_data_command((dir.path / "out" / "rounds.csv").string(), "nope",
                                 out3, err3) == cli::kExitConfig);
    CHECK(err3.str().find("nope") != std::string::npos);
}

TEST_CASE("float formatting is 6 significant digits") {
    CHECK(cli::format_g6(0.123456789) == "0.123457");
    CHECK(cli::format_g6(1.0) == "1");
    CHECK(cli::format_g6(12345678.0) == "1.23457e+07");
    CHECK(cli::format_g6(0.5) == "0.5");
}

} // TEST_SUITE
