#pragma once

#include <string>

#include "fedsim/engine.hpp"

namespace fedsim {

// Parses a JSON experiment description (// and /* */ comments allowed).
// Unknown keys anywhere are hard errors so typos in strategy names fail fast.
ExperimentConfig parse_config(const std::string& json_text);

// Reads and parses a config file; ConfigError if the file cannot be opened.
ExperimentConfig load_config_file(const std::string& path);

// Optional "output": {"dir": ...} block; empty string when absent.
std::string config_output_dir(const std::string& json_text);

// FNV-1a hash of the canonical (sorted-key, comment-free) form of the
// document, hex-encoded. Stable under key reordering and comment edits.
std::string config_hash(const std::string& json_text);

} // namespace fedsim
