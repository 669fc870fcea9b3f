#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace aurl {

// All randomness in the project flows through these helpers so that a given
// seed produces the same stream on every platform. std::uniform_*_distribution
// is implementation-defined and must not be used for anything reproducible.

using Rng = std::mt19937_64;

// Mixes (seed, stream) into an independent sub-seed (splitmix64 finalizer).
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Unbiased draw from [0, n). n must be >= 1.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    const std::uint64_t rem = std::numeric_limits<std::uint64_t>::max() % n;
    const std::uint64_t bound = std::numeric_limits<std::uint64_t>::max() - rem;
    std::uint64_t x = rng();
    while (x >= bound)
        x = rng();
    return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Fisher-Yates shuffle with the unbiased bounded draw above.
template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace aurl
