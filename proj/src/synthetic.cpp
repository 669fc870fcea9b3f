#include "aurl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <vector>

#include "aurl/errors.hpp"
#include "aurl/rng.hpp"

namespace aurl {

namespace {

// Cumulative weights for inverse-CDF sampling.
std::vector<double> zipf_cdf(std::size_t n, double exponent) {
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        acc += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
        cdf[r] = acc;
    }
    return cdf;
}

std::size_t draw_from_cdf(const std::vector<double>& cdf, Rng& rng) {
    const double x = uniform_unit(rng) * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
    return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

} // namespace

InteractionSet generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.num_users < 1 || cfg.num_items < 1 || cfg.num_interactions < 1)
        throw ShapeError("synthetic: sizes must be >= 1");
    if (cfg.clusters < 1 || cfg.clusters > cfg.num_items)
        throw ShapeError("synthetic: clusters must lie in 1..num_items");
    if (cfg.affinity < 0.0 || cfg.affinity > 1.0)
        throw ShapeError("synthetic: affinity must lie in [0, 1]");

    // Item index doubles as the popularity rank. Clusters are interleaved so
    // each one spans the whole popularity spectrum.
    const std::size_t c = cfg.clusters;
    const auto user_cdf = zipf_cdf(cfg.num_users, cfg.user_zipf);
    const auto item_cdf = zipf_cdf(cfg.num_items, cfg.zipf);

    // per-cluster CDFs over the cluster's own items
    std::vector<std::vector<std::uint32_t>> cluster_items(c);
    std::vector<std::vector<double>> cluster_cdf(c);
    for (std::uint32_t i = 0; i < cfg.num_items; ++i)
        cluster_items[i % c].push_back(i);
    for (std::size_t k = 0; k < c; ++k) {
        double acc = 0.0;
        cluster_cdf[k].reserve(cluster_items[k].size());
        for (auto i : cluster_items[k]) {
            acc += 1.0 / std::pow(static_cast<double>(i + 1), cfg.zipf);
            cluster_cdf[k].push_back(acc);
        }
    }

    Rng rng(sub_seed(cfg.seed, 0x5e3dULL));
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(cfg.num_interactions * 2);
    InteractionSet set;
    set.num_users = cfg.num_users;
    set.num_items = cfg.num_items;
    set.interactions.reserve(cfg.num_interactions);

    std::size_t produced = 0;
    std::size_t attempts = 0;
    const std::size_t max_attempts = cfg.num_interactions * 200;
    while (produced < cfg.num_interactions) {
        if (++attempts > max_attempts)
            throw SamplingError("synthetic: interaction space too dense to fill");
        const auto u = static_cast<std::uint32_t>(draw_from_cdf(user_cdf, rng));
        std::uint32_t i;
        if (uniform_unit(rng) < cfg.affinity) {
            const std::size_t k = u % c;
            i = cluster_items[k][draw_from_cdf(cluster_cdf[k], rng)];
        } else {
            i = static_cast<std::uint32_t>(draw_from_cdf(item_cdf, rng));
        }
        const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | i;
        if (!seen.insert(key).second)
            continue;
        set.interactions.emplace_back(u, i);
        ++produced;
    }

    for (std::uint32_t u = 0; u < cfg.num_users; ++u)
        set.user_ids.add("u" + std::to_string(u));
    for (std::uint32_t i = 0; i < cfg.num_items; ++i)
        set.item_ids.add("i" + std::to_string(i));

    std::sort(set.interactions.begin(), set.interactions.end());
    set.user_items.assign(cfg.num_users, {});
    for (const auto& [u, i] : set.interactions)
        set.user_items[u].push_back(i);
    return set;
}

} // namespace aurl
