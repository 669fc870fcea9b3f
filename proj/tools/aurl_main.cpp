#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "aurl/commands.hpp"
#include "aurl/config.hpp"
#include "aurl/errors.hpp"

namespace {

// Flag overrides funnel through the same key = value channel as the config
// file, so the CLI and the file cannot drift apart.
struct Overrides {
    std::vector<std::pair<std::string, std::string>> entries;
};

void add_override(CLI::App* cmd, Overrides& ov, const std::string& flag,
                  const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(
        flag,
        [&ov, key](const std::string& value) { ov.entries.emplace_back(key, value); },
        help);
}

void add_common(CLI::App* cmd, std::string& config_path, std::string& out_dir,
                Overrides& ov) {
    cmd->add_option("--config", config_path, "configuration file (key = value lines)");
    cmd->add_option("--out", out_dir, "output directory (default: out)");
    add_override(cmd, ov, "--seed", "seed", "RNG seed");
    add_override(cmd, ov, "--lambda1", "lambda1", "alignment weight");
    add_override(cmd, ov, "--lambda2", "lambda2", "uniformity weight");
    add_override(cmd, ov, "--lambda", "lambda", "L2 weight");
    add_override(cmd, ov, "--backbone", "backbone", "bprmf or lightgcn");
    add_override(cmd, ov, "--layers", "layers", "propagation layers (lightgcn)");
    add_override(cmd, ov, "--top-fraction", "top_fraction", "popular-group fraction");
    add_override(cmd, ov, "--dim", "dim", "embedding dimension");
    add_override(cmd, ov, "--batch-size", "batch_size", "training batch size");
    add_override(cmd, ov, "--lr", "lr", "Adam learning rate");
    add_override(cmd, ov, "--k", "eval_k", "evaluation cutoffs, comma separated");
    add_override(cmd, ov, "--epochs", "epochs_max", "maximum training epochs");
    add_override(cmd, ov, "--patience", "patience", "early-stopping patience");
    add_override(cmd, ov, "--t", "t", "uniformity temperature");
    add_override(cmd, ov, "--gamma", "gamma", "fixed kernel bandwidth");
    add_override(cmd, ov, "--bandwidth-rule", "bandwidth_rule", "median or fixed");
    add_override(cmd, ov, "--kcore", "kcore", "k-core filtering threshold");
    add_override(cmd, ov, "--align-cap", "align_sample_cap",
                 "alignment sample cap per group");
    add_override(cmd, ov, "--kde-bandwidth", "kde_bandwidth",
                 "angular density kernel bandwidth");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"collaborative filtering with group-alignment and uniformity "
                 "regularizers: prepare / train / evaluate / audit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string data_dir;
    std::string checkpoint_path;
    std::string input_path;
    bool synthetic_flag = false;
    Overrides overrides;

    auto* prepare = app.add_subcommand("prepare", "build train/valid/test splits");
    add_common(prepare, config_path, out_dir, overrides);
    prepare->add_flag("--synthetic", synthetic_flag, "use the built-in generator");
    prepare->add_option("--input", input_path, "raw interaction file (user<TAB>item)");

    auto* train = app.add_subcommand("train", "fit embeddings on a prepared split");
    add_common(train, config_path, out_dir, overrides);
    train->add_option("--data", data_dir, "prepared data directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "compute ranking and bias metrics");
    add_common(evaluate, config_path, out_dir, overrides);
    evaluate->add_option("--data", data_dir, "prepared data directory")->required();
    evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();

    auto* audit = app.add_subcommand("audit", "emit representation diagnostics");
    add_common(audit, config_path, out_dir, overrides);
    audit->add_option("--data", data_dir, "prepared data directory")->required();
    audit->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // bad usage is an input error (exit 2); --help stays 0
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        aurl::ExperimentConfig cfg;
        if (!config_path.empty())
            cfg = aurl::load_config_file(config_path);
        for (const auto& [key, value] : overrides.entries)
            aurl::apply_config_key(cfg, key, value);
        if (synthetic_flag)
            cfg.use_synthetic = true;
        if (!input_path.empty())
            cfg.input_path = input_path;

        if (prepare->parsed())
            return aurl::cmd_prepare(cfg, out_dir);
        if (train->parsed())
            return aurl::cmd_train(cfg, data_dir, out_dir);
        if (evaluate->parsed())
            return aurl::cmd_evaluate(cfg, data_dir, checkpoint_path, out_dir);
        return aurl::cmd_audit(cfg, data_dir, checkpoint_path, out_dir);
    } catch (const aurl::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const aurl::TrainingAbort& e) {
        std::fprintf(stderr, "error: training aborted: %s\n", e.what());
        return 3;
    } catch (const aurl::FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const aurl::CorruptionError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const aurl::ShapeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
