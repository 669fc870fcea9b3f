#include "aurl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "aurl/errors.hpp"
#include "aurl/io.hpp"
#include "aurl/rng.hpp"

namespace aurl {

bool InteractionSet::has_interaction(std::uint32_t u, std::uint32_t i) const {
    if (u >= user_items.size())
        return false;
    const auto& items = user_items[u];
    return std::binary_search(items.begin(), items.end(), i);
}

void InteractionSet::rebuild_from_user_items() {
    num_users = user_items.size();
    interactions.clear();
    for (std::uint32_t u = 0; u < user_items.size(); ++u) {
        auto& items = user_items[u];
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
        for (auto i : items)
            interactions.emplace_back(u, i);
    }
}

namespace {

void finalize_set(InteractionSet& set) {
    std::sort(set.interactions.begin(), set.interactions.end());
    set.interactions.erase(
        std::unique(set.interactions.begin(), set.interactions.end()),
        set.interactions.end());
    set.user_items.assign(set.num_users, {});
    for (const auto& [u, i] : set.interactions)
        set.user_items[u].push_back(i);
    // interactions are sorted, so each per-user list is already sorted
}

bool is_blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

} // namespace

InteractionSet parse_interactions(const std::string& text, const std::string& origin) {
    InteractionSet set;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || is_blank(line) || line[0] == '#')
            continue;
        const auto tab1 = line.find('\t');
        if (tab1 == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": expected at least two tab-separated fields");
        const auto tab2 = line.find('\t', tab1 + 1);
        const std::string user = line.substr(0, tab1);
        const std::string item = tab2 == std::string::npos
                                     ? line.substr(tab1 + 1)
                                     : line.substr(tab1 + 1, tab2 - tab1 - 1);
        if (user.empty() || item.empty())
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": empty user or item field");
        const auto u = set.user_ids.add(user);
        const auto i = set.item_ids.add(item);
        set.interactions.emplace_back(u, i);
    }
    if (set.interactions.empty())
        throw ParseError(origin + ": no interactions found");
    set.num_users = set.user_ids.raw.size();
    set.num_items = set.item_ids.raw.size();
    finalize_set(set);
    return set;
}

InteractionSet load_interactions(const std::filesystem::path& path) {
    return parse_interactions(read_file(path), path.string());
}

InteractionSet filter_k_core(const InteractionSet& set, std::size_t k) {
    std::vector<std::size_t> user_deg(set.num_users, 0);
    std::vector<std::size_t> item_deg(set.num_items, 0);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges = set.interactions;
    for (const auto& [u, i] : edges) {
        ++user_deg[u];
        ++item_deg[i];
    }
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> kept;
        kept.reserve(edges.size());
        for (const auto& [u, i] : edges) {
            if (user_deg[u] >= k && item_deg[i] >= k) {
                kept.push_back({u, i});
            } else {
                --user_deg[u];
                --item_deg[i];
                changed = true;
            }
        }
        edges.swap(kept);
    }
    // re-densify surviving entities in ascending old-index order

    std::vector<std::uint32_t> user_new(set.num_users, UINT32_MAX);
    std::vector<std::uint32_t> item_new(set.num_items, UINT32_MAX);
    InteractionSet out;
    for (const auto& [u, i] : edges) {
        user_new[u] = 0;
        item_new[i] = 0;
    }
    for (std::uint32_t u = 0; u < set.num_users; ++u) {
        if (user_new[u] != UINT32_MAX) {
            user_new[u] = static_cast<std::uint32_t>(out.user_ids.raw.size());
            out.user_ids.add(set.user_ids.raw.empty() ? std::to_string(u)
                                                      : set.user_ids.raw[u]);
        }
    }
    for (std::uint32_t i = 0; i < set.num_items; ++i) {
        if (item_new[i] != UINT32_MAX) {
            item_new[i] = static_cast<std::uint32_t>(out.item_ids.raw.size());
            out.item_ids.add(set.item_ids.raw.empty() ? std::to_string(i)
                                                      : set.item_ids.raw[i]);
        }
    }
    out.num_users = out.user_ids.raw.size();
    out.num_items = out.item_ids.raw.size();
    out.interactions.reserve(edges.size());
    for (const auto& [u, i] : edges)
        out.interactions.emplace_back(user_new[u], item_new[i]);
    finalize_set(out);
    return out;
}

Split split_per_user(const InteractionSet& set, const SplitRatios& ratios,
                     std::uint64_t seed) {
    if (ratios.train <= 0.0 || ratios.valid < 0.0 || ratios.test < 0.0)
        throw ShapeError("invalid split ratios");
    Split split;
    split.seed = seed;
    for (InteractionSet* part : {&split.train, &split.valid, &split.test}) {
        part->num_users = set.num_users;
        part->num_items = set.num_items;
        part->user_ids = set.user_ids;
        part->item_ids = set.item_ids;
        part->user_items.assign(set.num_users, {});
    }
    for (std::uint32_t u = 0; u < set.num_users; ++u) {
        std::vector<std::uint32_t> items = set.user_items[u];
        if (items.empty())
            continue;
        Rng rng(sub_seed(seed, u));
        shuffle_vec(items, rng);
        const auto n = items.size();
        auto n_valid = static_cast<std::size_t>(std::floor(ratios.valid * static_cast<double>(n)));
        auto n_test = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n)));
        // every user keeps at least one training interaction
        while (n_valid + n_test >= n) {
            if (n_test > 0)
                --n_test;
            else if (n_valid > 0)
                --n_valid;
            else
                break;
        }
        const std::size_t n_train = n - n_valid - n_test;
        for (std::size_t j = 0; j < n; ++j) {
            InteractionSet* part = j < n_train                ? &split.train
                                   : j < n_train + n_valid    ? &split.valid
                                                              : &split.test;
            part->user_items[u].push_back(items[j]);
        }
    }
    for (InteractionSet* part : {&split.train, &split.valid, &split.test})
        part->rebuild_from_user_items();
    return split;
}

PopularityTable compute_popularity(const InteractionSet& train) {
    PopularityTable pop;
    pop.item_pop.assign(train.num_items, 0);
    pop.user_pop.assign(train.num_users, 0);
    for (const auto& [u, i] : train.interactions) {
        ++pop.user_pop[u];
        ++pop.item_pop[i];
    }
    return pop;
}

namespace {

std::vector<Group> assign_side(const std::vector<std::uint32_t>& counts, double f) {
    const std::size_t n = counts.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (counts[a] != counts[b])
            return counts[a] > counts[b];
        return a < b;
    });
    const auto n_pop = static_cast<std::size_t>(
        std::llround(f * static_cast<double>(n)));
    std::vector<Group> groups(n, Group::kTail);
    for (std::size_t j = 0; j < std::min(n_pop, n); ++j)
        groups[order[j]] = Group::kPopular;
    return groups;
}

} // namespace

GroupAssignment assign_groups(const PopularityTable& pop, double top_fraction) {
    if (top_fraction < 0.0 || top_fraction > 1.0)
        throw ShapeError("top_fraction must lie in [0, 1]");
    GroupAssignment ga;
    ga.top_fraction = top_fraction;
    ga.user_group = assign_side(pop.user_pop, top_fraction);
    ga.item_group = assign_side(pop.item_pop, top_fraction);
    return ga;
}

std::size_t GroupAssignment::popular_user_count() const {
    return static_cast<std::size_t>(
        std::count(user_group.begin(), user_group.end(), Group::kPopular));
}

std::size_t GroupAssignment::popular_item_count() const {
    return static_cast<std::size_t>(
        std::count(item_group.begin(), item_group.end(), Group::kPopular));
}

std::vector<std::uint32_t> GroupAssignment::users_in(Group g) const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t u = 0; u < user_group.size(); ++u)
        if (user_group[u] == g)
            out.push_back(u);
    return out;
}

std::vector<std::uint32_t> GroupAssignment::items_in(Group g) const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < item_group.size(); ++i)
        if (item_group[i] == g)
            out.push_back(i);
    return out;
}

std::string format_interactions(const InteractionSet& set) {
    std::ostringstream out;
    for (const auto& [u, i] : set.interactions)
        out << u << '\t' << i << '\n';
    return out.str();
}

} // namespace aurl
