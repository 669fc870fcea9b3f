#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace aurl {

// Bidirectional raw-ID <-> dense-index tables for one side (users or items).
struct IdMap {
    std::vector<std::string> raw;              // dense index -> raw id
    std::unordered_map<std::string, std::uint32_t> index; // raw id -> dense index

    std::uint32_t add(const std::string& id) {
        auto it = index.find(id);
        if (it != index.end())
            return it->second;
        const auto idx = static_cast<std::uint32_t>(raw.size());
        raw.push_back(id);
        index.emplace(id, idx);
        return idx;
    }
};

// Implicit-feedback interaction set over dense 0-based user/item indices.
// interactions is duplicate-free and sorted by (user, item); user_items holds
// the same pairs as per-user sorted item lists.
struct InteractionSet {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> interactions;
    std::vector<std::vector<std::uint32_t>> user_items;
    IdMap user_ids;
    IdMap item_ids;

    std::size_t size() const noexcept { return interactions.size(); }
    bool has_interaction(std::uint32_t u, std::uint32_t i) const;

    // Rebuilds interactions + sizes from user_items (num_items must be set).
    void rebuild_from_user_items();
};

struct SplitRatios {
    double train = 0.7;
    double valid = 0.1;
    double test = 0.2;
};

// Per-user train/validation/test partition sharing one dense index space.
struct Split {
    InteractionSet train;
    InteractionSet valid;
    InteractionSet test;
    std::uint64_t seed = 0;
};

struct PopularityTable {
    std::vector<std::uint32_t> item_pop; // training interaction count per item
    std::vector<std::uint32_t> user_pop; // training interaction count per user
};

enum class Group : std::uint8_t { kTail = 0, kPopular = 1 };

struct GroupAssignment {
    std::vector<Group> user_group;
    std::vector<Group> item_group;
    double top_fraction = 0.2;

    std::size_t popular_user_count() const;
    std::size_t popular_item_count() const;
    std::vector<std::uint32_t> users_in(Group g) const;
    std::vector<std::uint32_t> items_in(Group g) const;
};

// Reads `raw_user<TAB>raw_item[<TAB>ignored...]` lines; `#` comments and blank
// lines are skipped. Dense indices follow first appearance; duplicates collapse.
InteractionSet load_interactions(const std::filesystem::path& path);

// Same parser over an in-memory buffer (used by the synthetic path and tests).
InteractionSet parse_interactions(const std::string& text, const std::string& origin);

// Iteratively removes users/items with fewer than k interactions until a
// fixpoint, then re-densifies indices (ascending old-index order).
InteractionSet filter_k_core(const InteractionSet& set, std::size_t k = 5);

// Per user: shuffle, take floor(valid*n) validation and floor(test*n) test
// interactions, remainder to train (at least one training interaction each).
Split split_per_user(const InteractionSet& set, const SplitRatios& ratios,
                     std::uint64_t seed);

PopularityTable compute_popularity(const InteractionSet& train);

// Sorts each side by descending count (ties by ascending index) and flags the
// top round(f * count) entities popular.
GroupAssignment assign_groups(const PopularityTable& pop, double top_fraction = 0.2);

// Serializes interactions to the tab-separated text format on dense indices
// (the on-disk form of prepared splits).
std::string format_interactions(const InteractionSet& set);

} // namespace aurl
