#pragma once

#include <filesystem>

#include "aurl/config.hpp"
#include "aurl/dataset.hpp"

namespace aurl {

// Prepared-split bundle as written by cmd_prepare and consumed by the other
// commands: train.tsv / valid.tsv / test.tsv on dense indices + manifest.json.
struct PreparedData {
    Split split;
    PopularityTable popularity;
    GroupAssignment groups;
};

PreparedData load_prepared(const std::filesystem::path& data_dir, double top_fraction);

// All commands return 0 on success and throw on failure; main() maps the
// exception type to the documented exit code.
int cmd_prepare(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

int cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
              const std::filesystem::path& out_dir);

int cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                 const std::filesystem::path& checkpoint_path,
                 const std::filesystem::path& out_dir);

int cmd_audit(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
              const std::filesystem::path& checkpoint_path,
              const std::filesystem::path& out_dir);

} // namespace aurl
