#include "aurl/config.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <sstream>

#include "aurl/errors.hpp"
#include "aurl/io.hpp"

namespace aurl {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size())
            throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(value, &used);
        if (used != value.size())
            throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': expected a nonnegative integer, got '" +
                         value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1")
        return true;
    if (value == "false" || value == "0")
        return false;
    throw ParseError("config key '" + key + "': expected true/false, got '" + value + "'");
}

} // namespace

std::vector<std::size_t> parse_k_list(const std::string& value) {
    std::vector<std::size_t> ks;
    std::istringstream in(value);
    std::string part;
    while (std::getline(in, part, ',')) {
        part = trim(part);
        if (part.empty())
            continue;
        const auto k = parse_uint("eval_k", part);
        if (k < 1)
            throw ParseError("eval_k entries must be >= 1");
        ks.push_back(static_cast<std::size_t>(k));
    }
    if (ks.empty())
        throw ParseError("eval_k must name at least one cutoff");
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
}

void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value) {
    auto& t = cfg.train;
    if (key == "seed") {
        t.seed = parse_uint(key, value);
        cfg.synthetic.seed = t.seed;
    } else if (key == "dim") {
        t.dim = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "batch_size") {
        t.batch_size = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "lr") {
        t.lr = parse_double(key, value);
    } else if (key == "epochs_max") {
        t.epochs_max = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "patience") {
        t.patience = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "lambda1") {
        t.lambda1 = parse_double(key, value);
    } else if (key == "lambda2") {
        t.lambda2 = parse_double(key, value);
    } else if (key == "lambda") {
        t.lambda = parse_double(key, value);
    } else if (key == "neg_per_pos") {
        t.neg_per_pos = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "align_sample_cap") {
        t.align_sample_cap = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "top_fraction") {
        t.top_fraction = parse_double(key, value);
    } else if (key == "backbone") {
        t.backbone.kind = parse_backbone_kind(value);
    } else if (key == "layers") {
        t.backbone.layers = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "bandwidth_rule") {
        t.kernel.bandwidth_rule = parse_bandwidth_rule(value);
    } else if (key == "gamma") {
        t.kernel.gamma = parse_double(key, value);
    } else if (key == "t") {
        t.kernel.t = parse_double(key, value);
    } else if (key == "kcore") {
        cfg.kcore = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "eval_k") {
        cfg.eval_ks = parse_k_list(value);
    } else if (key == "kde_bandwidth") {
        cfg.kde_bandwidth = parse_double(key, value);
    } else if (key == "input") {
        cfg.input_path = value;
    } else if (key == "synthetic") {
        cfg.use_synthetic = parse_bool(key, value);
    } else if (key == "synthetic_users") {
        cfg.synthetic.num_users = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "synthetic_items") {
        cfg.synthetic.num_items = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "synthetic_interactions") {
        cfg.synthetic.num_interactions = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "synthetic_zipf") {
        cfg.synthetic.zipf = parse_double(key, value);
    } else if (key == "synthetic_user_zipf") {
        cfg.synthetic.user_zipf = parse_double(key, value);
    } else if (key == "synthetic_clusters") {
        cfg.synthetic.clusters = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "synthetic_affinity") {
        cfg.synthetic.affinity = parse_double(key, value);
    } else {
        throw ParseError("unknown config key '" + key + "'");
    }
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#')
            continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": empty key or value");
        try {
            apply_config_key(cfg, key, value);
        } catch (const ParseError& e) {
            throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
    return parse_config_text(read_file(path), path.string());
}

std::string config_to_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << std::setprecision(17); // doubles survive the text round trip
    const auto& t = cfg.train;
    out << "seed = " << t.seed << '\n';
    out << "dim = " << t.dim << '\n';
    out << "batch_size = " << t.batch_size << '\n';
    out << "lr = " << t.lr << '\n';
    out << "epochs_max = " << t.epochs_max << '\n';
    out << "patience = " << t.patience << '\n';
    out << "lambda1 = " << t.lambda1 << '\n';
    out << "lambda2 = " << t.lambda2 << '\n';
    out << "lambda = " << t.lambda << '\n';
    out << "neg_per_pos = " << t.neg_per_pos << '\n';
    out << "align_sample_cap = " << t.align_sample_cap << '\n';
    out << "top_fraction = " << t.top_fraction << '\n';
    out << "backbone = " << backbone_kind_name(t.backbone.kind) << '\n';
    out << "layers = " << t.backbone.layers << '\n';
    out << "bandwidth_rule = " << bandwidth_rule_name(t.kernel.bandwidth_rule) << '\n';
    out << "gamma = " << t.kernel.gamma << '\n';
    out << "t = " << t.kernel.t << '\n';
    out << "kcore = " << cfg.kcore << '\n';
    out << "eval_k = ";
    for (std::size_t i = 0; i < cfg.eval_ks.size(); ++i)
        out << (i > 0 ? "," : "") << cfg.eval_ks[i];
    out << '\n';
    out << "kde_bandwidth = " << cfg.kde_bandwidth << '\n';
    out << "synthetic = " << (cfg.use_synthetic ? "true" : "false") << '\n';
    out << "synthetic_users = " << cfg.synthetic.num_users << '\n';
    out << "synthetic_items = " << cfg.synthetic.num_items << '\n';
    out << "synthetic_interactions = " << cfg.synthetic.num_interactions << '\n';
    out << "synthetic_zipf = " << cfg.synthetic.zipf << '\n';
    out << "synthetic_user_zipf = " << cfg.synthetic.user_zipf << '\n';
    out << "synthetic_clusters = " << cfg.synthetic.clusters << '\n';
    out << "synthetic_affinity = " << cfg.synthetic.affinity << '\n';
    if (!cfg.input_path.empty())
        out << "input = " << cfg.input_path << '\n';
    return out.str();
}

} // namespace aurl
