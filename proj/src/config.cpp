#include "fedsim/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

using nlohmann::json;

json parse_json(const std::string& text) {
    try {
        return json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

void reject_unknown_keys(const json& obj, const char* section,
                         std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok)
            throw ConfigError("unknown key '" + key + "' in " + section);
    }
}

double get_number(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number())
        throw ConfigError(std::string("'") + key + "' must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer())
        throw ConfigError(std::string("'") + key + "' must be an integer");
    return obj[key].get<int>();
}

void parse_dataset(const json& obj, DatasetParams& d) {
    reject_unknown_keys(obj, "dataset",
                        {"n_scans", "grid_size", "mean_radius", "radius_spread",
                         "noise_sigma", "class_separation", "pixels_per_scan",
                         "batch_size", "hidden_width"});
    const int n = get_int(obj, "n_scans", static_cast<int>(d.n_scans));
    if (n < 1) throw ConfigError("'n_scans' must be positive");
    d.n_scans = static_cast<std::size_t>(n);
    d.scan.grid_size = get_int(obj, "grid_size", d.scan.grid_size);
    d.scan.mean_radius = get_number(obj, "mean_radius", d.scan.mean_radius);
    d.scan.radius_spread = get_number(obj, "radius_spread", d.scan.radius_spread);
    d.scan.noise_sigma = get_number(obj, "noise_sigma", d.scan.noise_sigma);
    d.scan.class_separation = get_number(obj, "class_separation", d.scan.class_separation);
    d.pixels_per_scan = get_int(obj, "pixels_per_scan", d.pixels_per_scan);
    d.batch_size = get_int(obj, "batch_size", d.batch_size);
    d.hidden_width = get_int(obj, "hidden_width", d.hidden_width);
    if (d.pixels_per_scan < 1 || d.batch_size < 1 || d.hidden_width < 1)
        throw ConfigError("dataset sizes must be positive");
}

void parse_partition(const json& obj, PartitionSpec& p) {
    reject_unknown_keys(obj, "partition",
                        {"profile", "proportions", "artificial", "bins", "largest_k"});
    if (obj.contains("profile") && obj.contains("proportions"))
        throw ConfigError("partition: give either 'profile' or 'proportions', not both");
    if (obj.contains("proportions")) {
        if (!obj["proportions"].is_array())
            throw ConfigError("'proportions' must be an array");
        p.proportions = obj["proportions"].get<std::vector<double>>();
    } else {
        const std::string profile =
            obj.contains("profile") ? obj["profile"].get<std::string>() : "skewed14";
        if (profile == "skewed14") p.proportions = skewed14_proportions();
        else if (profile == "desk") p.proportions = desk_proportions();
        else throw ConfigError("unknown partition profile '" + profile + "'");
    }
    if (obj.contains("artificial")) {
        if (!obj["artificial"].is_boolean())
            throw ConfigError("'artificial' must be a boolean");
        p.artificial = obj["artificial"].get<bool>();
    }
    p.artificial_bins = get_int(obj, "bins", p.artificial_bins);
    p.largest_k = get_int(obj, "largest_k", p.largest_k);
}

// "aggregator": "fedavg" or {"name": ..., "beta": ..., "gamma": ...}
void parse_aggregator(const json& node, std::string& name, AggregatorParams& params) {
    if (node.is_string()) {
        name = node.get<std::string>();
        return;
    }
    if (!node.is_object()) throw ConfigError("'aggregator' must be a string or object");
    reject_unknown_keys(node, "aggregator", {"name", "beta", "gamma"});
    if (!node.contains("name")) throw ConfigError("aggregator: missing 'name'");
    name = node["name"].get<std::string>();
    params.beta = get_number(node, "beta", params.beta);
    params.gamma = get_number(node, "gamma", params.gamma);
}

void parse_selector(const json& node, SelectorParams& sel) {
    if (node.is_string()) {
        sel.name = node.get<std::string>();
        return;
    }
    if (!node.is_object()) throw ConfigError("'selector' must be a string or object");
    reject_unknown_keys(node, "selector", {"name", "k"});
    if (!node.contains("name")) throw ConfigError("selector: missing 'name'");
    sel.name = node["name"].get<std::string>();
    if (node.contains("k")) sel.k = get_int(node, "k", 0);
}

void parse_hyper(const json& node, std::string& name, HyperParams& params) {
    if (node.is_string()) {
        name = node.get<std::string>();
        return;
    }
    if (!node.is_object()) throw ConfigError("'hyper' must be a string or object");
    reject_unknown_keys(node, "hyper", {"name", "lr0", "patience", "decay_factor", "e0"});
    if (!node.contains("name")) throw ConfigError("hyper: missing 'name'");
    name = node["name"].get<std::string>();
    params.lr0 = get_number(node, "lr0", params.lr0);
    params.patience = get_int(node, "patience", params.patience);
    params.decay_factor = get_number(node, "decay_factor", params.decay_factor);
    params.e0 = get_int(node, "e0", params.e0);
    if (params.patience < 1) throw ConfigError("hyper: 'patience' must be >= 1");
    if (params.e0 < 1) throw ConfigError("hyper: 'e0' must be >= 1");
    if (params.decay_factor <= 0.0 || params.decay_factor >= 1.0)
        throw ConfigError("hyper: 'decay_factor' must be in (0, 1)");
}

void parse_time_model(const json& obj, ExperimentConfig& cfg) {
    reject_unknown_keys(obj, "time_model",
                        {"comm_overhead", "step_cost", "agg_cost", "speed_spread",
                         "speed_factors"});
    cfg.time_model.comm_overhead =
        get_number(obj, "comm_overhead", cfg.time_model.comm_overhead);
    cfg.time_model.step_cost = get_number(obj, "step_cost", cfg.time_model.step_cost);
    cfg.time_model.agg_cost = get_number(obj, "agg_cost", cfg.time_model.agg_cost);
    cfg.speed_spread = get_number(obj, "speed_spread", cfg.speed_spread);
    if (obj.contains("speed_factors")) {
        if (!obj["speed_factors"].is_object())
            throw ConfigError("'speed_factors' must map collaborator ids to numbers");
        for (const auto& [id, v] : obj["speed_factors"].items())
            cfg.speed_factors[id] = v.get<double>();
    }
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    const json doc = parse_json(json_text);
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown_keys(doc, "config",
                        {"seed", "rounds", "dataset", "partition", "aggregator",
                         "selector", "hyper", "time_model", "output"});

    ExperimentConfig cfg;
    cfg.partition.proportions = skewed14_proportions();

    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer())
            throw ConfigError("'seed' must be an integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    cfg.rounds = get_int(doc, "rounds", cfg.rounds);
    if (cfg.rounds < 1) throw ConfigError("'rounds' must be >= 1");

    if (doc.contains("dataset")) parse_dataset(doc["dataset"], cfg.dataset);
    if (doc.contains("partition")) parse_partition(doc["partition"], cfg.partition);
    if (doc.contains("aggregator"))
        parse_aggregator(doc["aggregator"], cfg.aggregator, cfg.aggregator_params);
    if (doc.contains("selector")) parse_selector(doc["selector"], cfg.selector);
    if (doc.contains("hyper")) parse_hyper(doc["hyper"], cfg.hyper, cfg.hyper_params);
    if (doc.contains("time_model")) parse_time_model(doc["time_model"], cfg);
    if (doc.contains("output")) {
        reject_unknown_keys(doc["output"], "output", {"dir"});
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_output_dir(const std::string& json_text) {
    const json doc = parse_json(json_text);
    if (doc.is_object() && doc.contains("output") && doc["output"].is_object() &&
        doc["output"].contains("dir"))
        return doc["output"]["dir"].get<std::string>();
    return "";
}

std::string config_hash(const std::string& json_text) {
    // nlohmann keeps object keys sorted, so dump() is canonical.
    const std::string canonical = parse_json(json_text).dump();
    const std::uint64_t h = fnv1a64(canonical);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace fedsim
