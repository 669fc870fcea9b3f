#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aurl/synthetic.hpp"
#include "aurl/trainer.hpp"

namespace aurl {

// Everything a command needs, as one flat key = value namespace. The keys are
// listed in apply_config_key; unknown keys are rejected.
struct ExperimentConfig {
    TrainConfig train;
    std::size_t kcore = 5;
    std::vector<std::size_t> eval_ks = {20};
    double kde_bandwidth = 0.2;
    SyntheticConfig synthetic;
    bool use_synthetic = false;
    std::string input_path;
};

// Applies one key = value assignment; throws ParseError for unknown keys or
// malformed values.
void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value);

// `key = value` lines, `#` comments, blank lines allowed.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Serializes the effective configuration back to config-file syntax (used in
// manifests and checkpoint metadata so runs are self-describing).
std::string config_to_text(const ExperimentConfig& cfg);

std::vector<std::size_t> parse_k_list(const std::string& value);

} // namespace aurl
