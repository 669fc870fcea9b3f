#pragma once

#include <cstdint>

#include "aurl/dataset.hpp"

namespace aurl {

// Implicit-feedback generator with power-law item popularity, skewed user
// activity and latent taste clusters. Items are assigned popularity weights
// 1/(rank+1)^zipf; users pick in-cluster items with probability `affinity`,
// otherwise they follow global popularity.
struct SyntheticConfig {
    std::size_t num_users = 2000;
    std::size_t num_items = 1500;
    std::size_t num_interactions = 40000;
    double zipf = 0.9;       // item popularity exponent
    double user_zipf = 0.6;  // user activity exponent
    std::size_t clusters = 10;
    double affinity = 0.8;   // probability of staying in the user's cluster
    std::uint64_t seed = 0;
};

InteractionSet generate_synthetic(const SyntheticConfig& cfg);

} // namespace aurl
