#include "aurl/commands.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>

#include "aurl/backbone.hpp"
#include "aurl/embeddings.hpp"
#include "aurl/errors.hpp"
#include "aurl/eval.hpp"
#include "aurl/io.hpp"
#include "aurl/synthetic.hpp"
#include "aurl/trainer.hpp"

#include "json.hpp"

namespace aurl {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

InteractionSet load_indexed(const fs::path& path, std::size_t num_users,
                            std::size_t num_items) {
    InteractionSet set;
    set.num_users = num_users;
    set.num_items = num_items;
    set.user_items.assign(num_users, {});
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected two tab-separated indices");
        std::uint32_t u, i;
        try {
            std::size_t used = 0;
            u = static_cast<std::uint32_t>(std::stoul(line.substr(0, tab), &used));
            if (used != tab)
                throw ParseError("");
            const std::string rest = line.substr(tab + 1);
            i = static_cast<std::uint32_t>(std::stoul(rest, &used));
            if (used != rest.size())
                throw ParseError("");
        } catch (const std::exception&) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected dense integer indices");
        }
        if (u >= num_users || i >= num_items)
            throw CorruptionError(path.string() + ":" + std::to_string(lineno) +
                                  ": index out of the manifest's range");
        set.user_items[u].push_back(i);
    }
    set.rebuild_from_user_items(); // canonical order even for edited files
    return set;
}

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

void check_exists(const fs::path& p, const char* what) {
    if (!fs::exists(p))
        throw ParseError(std::string(what) + " not found: " + p.string());
}

} // namespace

PreparedData load_prepared(const fs::path& data_dir, double top_fraction) {
    check_exists(data_dir / "manifest.json", "manifest");
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(read_file(data_dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError("manifest.json: " + std::string(e.what()));
    }
    const auto num_users = manifest.at("num_users").get<std::size_t>();
    const auto num_items = manifest.at("num_items").get<std::size_t>();

    PreparedData pd;
    pd.split.train = load_indexed(data_dir / "train.tsv", num_users, num_items);
    pd.split.valid = load_indexed(data_dir / "valid.tsv", num_users, num_items);
    pd.split.test = load_indexed(data_dir / "test.tsv", num_users, num_items);
    pd.split.seed = manifest.value("seed", 0ull);
    pd.popularity = compute_popularity(pd.split.train);
    pd.groups = assign_groups(pd.popularity, top_fraction);
    return pd;
}

int cmd_prepare(const ExperimentConfig& cfg, const fs::path& out_dir) {
    InteractionSet raw;
    if (cfg.use_synthetic) {
        raw = generate_synthetic(cfg.synthetic);
    } else {
        if (cfg.input_path.empty())
            throw ParseError("prepare needs either synthetic=true or an input path");
        check_exists(cfg.input_path, "input dataset");
        raw = load_interactions(cfg.input_path);
    }
    const InteractionSet filtered = filter_k_core(raw, cfg.kcore);
    if (filtered.size() == 0)
        throw ParseError("k-core filtering (k = " + std::to_string(cfg.kcore) +
                         ") removed every interaction");
    const Split split = split_per_user(filtered, SplitRatios{}, cfg.train.seed);
    const PopularityTable pop = compute_popularity(split.train);
    const GroupAssignment groups = assign_groups(pop, cfg.train.top_fraction);

    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "train.tsv", format_interactions(split.train));
    write_file_atomic(out_dir / "valid.tsv", format_interactions(split.valid));
    write_file_atomic(out_dir / "test.tsv", format_interactions(split.test));

    ordered_json manifest;
    manifest["num_users"] = filtered.num_users;
    manifest["num_items"] = filtered.num_items;
    manifest["num_train"] = split.train.size();
    manifest["num_valid"] = split.valid.size();
    manifest["num_test"] = split.test.size();
    manifest["seed"] = cfg.train.seed;
    manifest["kcore"] = cfg.kcore;
    manifest["top_fraction"] = cfg.train.top_fraction;
    auto group_array = [](const std::vector<Group>& g) {
        std::vector<int> out(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            out[i] = g[i] == Group::kPopular ? 1 : 0;
        return out;
    };
    manifest["user_group"] = group_array(groups.user_group);
    manifest["item_group"] = group_array(groups.item_group);
    manifest["user_pop"] = pop.user_pop;
    manifest["item_pop"] = pop.item_pop;
    write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const fs::path& data_dir,
              const fs::path& out_dir) {
    validate_config(cfg.train);
    const PreparedData pd = load_prepared(data_dir, cfg.train.top_fraction);
    fs::create_directories(out_dir);

    std::string log_text;
    FitObserver observer;
    observer.on_epoch = [&](const EpochLog& e) {
        ordered_json line;
        line["epoch"] = e.epoch;
        line["rec"] = e.loss.rec;
        line["align"] = e.loss.align;
        line["uniform"] = e.loss.uniform;
        line["l2"] = e.loss.l2;
        line["total"] = e.loss.total;
        line["val_ndcg20"] = e.val_ndcg;
        line["elapsed_s"] = e.elapsed_s;
        log_text += line.dump() + "\n";
        write_file_atomic(out_dir / "train_log.jsonl", log_text);
    };
    observer.on_improved = [&](const EmbeddingState& state, const EpochLog& e) {
        ordered_json meta;
        meta["epoch"] = e.epoch;
        meta["val_ndcg20"] = e.val_ndcg;
        meta["config"] = config_to_text(cfg);
        save_checkpoint(state, out_dir / "checkpoint.bin", meta.dump(2) + "\n");
    };

    fit(pd.split, pd.groups, cfg.train, &observer);
    return 0;
}

namespace {

struct LoadedModel {
    EmbeddingState state;
    FinalReps reps;
    NormalizedAdjacency adj;
    bool has_adj = false;
};

LoadedModel load_model(const ExperimentConfig& cfg, const PreparedData& pd,
                       const fs::path& checkpoint_path) {
    check_exists(checkpoint_path, "checkpoint");
    LoadedModel m;
    m.state = load_checkpoint(checkpoint_path);
    if (m.state.num_users() != pd.split.train.num_users ||
        m.state.num_items() != pd.split.train.num_items)
        throw ShapeError("checkpoint shape (" + std::to_string(m.state.num_users()) +
                         "x" + std::to_string(m.state.num_items()) +
                         ") does not match the prepared split");
    const NormalizedAdjacency* adj = nullptr;
    if (cfg.train.backbone.kind == BackboneKind::kLightGCN &&
        cfg.train.backbone.layers > 0) {
        m.adj = build_normalized_adjacency(pd.split.train);
        m.has_adj = true;
        adj = &m.adj;
    }
    m.reps = compute_final(m.state, cfg.train.backbone, adj);
    return m;
}

} // namespace

int cmd_evaluate(const ExperimentConfig& cfg, const fs::path& data_dir,
                 const fs::path& checkpoint_path, const fs::path& out_dir) {
    const PreparedData pd = load_prepared(data_dir, cfg.train.top_fraction);
    const LoadedModel model = load_model(cfg, pd, checkpoint_path);

    EvalOptions opts;
    opts.ks = cfg.eval_ks;
    opts.seed = cfg.train.seed;
    const MetricReport report = evaluate_model(model.reps, pd.split.train,
                                               pd.split.test, pd.groups,
                                               pd.popularity, opts);
    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "metrics.json", metric_report_to_json(report));
    return 0;
}

int cmd_audit(const ExperimentConfig& cfg, const fs::path& data_dir,
              const fs::path& checkpoint_path, const fs::path& out_dir) {
    const PreparedData pd = load_prepared(data_dir, cfg.train.top_fraction);
    const LoadedModel model = load_model(cfg, pd, checkpoint_path);
    fs::create_directories(out_dir);

    const std::size_t k = cfg.eval_ks.front();
    const ExposureReport exposure =
        group_exposure(model.reps, pd.split.train, pd.split.test, pd.groups, k);

    ordered_json audit;
    audit["k"] = k;
    audit["dim"] = model.state.dim();
    audit["score_gap"] = score_gap_mean(model.reps, pd.groups);
    audit["loss_gap"] = loss_gap(model.reps, pd.split.train, pd.groups, cfg.train.seed);
    audit["exposure_popular"] = exposure.popular;
    audit["exposure_tail"] = exposure.tail;
    audit["exposure_test_baseline_popular"] = exposure.test_baseline_popular;
    audit["exposure_test_baseline_tail"] = exposure.test_baseline_tail;

    if (model.state.dim() == 2) {
        std::ostringstream csv;
        csv << "angle,density,group\n";
        auto emit = [&](const Mat& reps, const std::vector<std::uint32_t>& rows,
                        const char* name) {
            if (rows.size() < 1)
                return;
            const Mat unit = l2_normalize_rows(gather_rows(reps, rows));
            const AngularDensity dens = angular_density(unit, cfg.kde_bandwidth);
            for (std::size_t g = 0; g < dens.angle.size(); ++g)
                csv << format_double(dens.angle[g]) << ',' << format_double(dens.density[g])
                    << ',' << name << '\n';
        };
        emit(model.reps.user, pd.groups.users_in(Group::kPopular), "user_popular");
        emit(model.reps.user, pd.groups.users_in(Group::kTail), "user_tail");
        emit(model.reps.item, pd.groups.items_in(Group::kPopular), "item_popular");
        emit(model.reps.item, pd.groups.items_in(Group::kTail), "item_tail");
        write_file_atomic(out_dir / "angles.csv", csv.str());
        audit["angular_density"] = "angles.csv";
    } else {
        std::fprintf(stderr,
                     "warning: angular density skipped (dim = %zu, needs 2)\n",
                     model.state.dim());
        audit["angular_density"] = nullptr;
    }
    write_file_atomic(out_dir / "audit.json", audit.dump(2) + "\n");
    return 0;
}

} // namespace aurl
