#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aurl/dataset.hpp"
#include "aurl/embeddings.hpp"
#include "aurl/matrix.hpp"

namespace aurl {

enum class BackboneKind { kBPRMF, kLightGCN };

BackboneKind parse_backbone_kind(const std::string& name);
std::string backbone_kind_name(BackboneKind kind);

struct BackboneConfig {
    BackboneKind kind = BackboneKind::kBPRMF;
    std::size_t layers = 3; // ignored for bprmf
};

// Symmetrically normalized bipartite adjacency over M+N nodes (users first),
// CSR layout. Entry (u, M+i) = 1/sqrt(deg(u) * deg(i)) per training edge.
struct NormalizedAdjacency {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::vector<std::size_t> offsets; // size M+N+1
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;

    std::size_t size() const noexcept { return num_users + num_items; }
    double entry(std::uint32_t r, std::uint32_t c) const; // dense probe, O(deg)
};

NormalizedAdjacency build_normalized_adjacency(const InteractionSet& train);

// out = A_tilde * in
Mat adj_multiply(const NormalizedAdjacency& adj, const Mat& in);

// Mean of E^(0)..E^(L) with E^(l+1) = A_tilde * E^(l). layers = 0 is identity.
Mat propagate(const Mat& emb0, const NormalizedAdjacency& adj, std::size_t layers);

// Final representations after the configured backbone.
struct FinalReps {
    Mat user;
    Mat item;
};

// adj may be null for bprmf; required for lightgcn.
FinalReps compute_final(const EmbeddingState& state, const BackboneConfig& cfg,
                        const NormalizedAdjacency* adj);

// Pulls gradients on the final representations back to the ego embeddings.
// Propagation is linear with a symmetric operator, so the pullback is the
// forward map applied to the stacked gradient.
void backbone_backward(const BackboneConfig& cfg, const NormalizedAdjacency* adj,
                       const Mat& grad_user_final, const Mat& grad_item_final,
                       Mat& grad_user_ego, Mat& grad_item_ego);

inline double score(std::span<const double> z, std::span<const double> h) {
    return dot(z, h);
}

std::vector<double> score_all(std::uint32_t u, const FinalReps& reps);

} // namespace aurl
