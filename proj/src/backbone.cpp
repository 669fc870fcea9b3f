#include "aurl/backbone.hpp"

#include <algorithm>
#include <cmath>

#include "aurl/errors.hpp"

namespace aurl {

BackboneKind parse_backbone_kind(const std::string& name) {
    if (name == "bprmf")
        return BackboneKind::kBPRMF;
    if (name == "lightgcn")
        return BackboneKind::kLightGCN;
    throw ParseError("unknown backbone '" + name + "' (expected bprmf or lightgcn)");
}

std::string backbone_kind_name(BackboneKind kind) {
    return kind == BackboneKind::kBPRMF ? "bprmf" : "lightgcn";
}

double NormalizedAdjacency::entry(std::uint32_t r, std::uint32_t c) const {
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k)
        if (cols[k] == c)
            return vals[k];
    return 0.0;
}

NormalizedAdjacency build_normalized_adjacency(const InteractionSet& train) {
    const std::size_t m = train.num_users;
    const std::size_t n = train.num_items;
    std::vector<std::size_t> user_deg(m, 0);
    std::vector<std::size_t> item_deg(n, 0);
    for (const auto& [u, i] : train.interactions) {
        ++user_deg[u];
        ++item_deg[i];
    }
    for (std::size_t u = 0; u < m; ++u)
        if (user_deg[u] == 0)
            throw ShapeError("adjacency: user " + std::to_string(u) +
                             " has no training interactions");
    for (std::size_t i = 0; i < n; ++i)
        if (item_deg[i] == 0)
            throw ShapeError("adjacency: item " + std::to_string(i) +
                             " has no training interactions");

    NormalizedAdjacency adj;
    adj.num_users = m;
    adj.num_items = n;
    adj.offsets.assign(m + n + 1, 0);
    for (const auto& [u, i] : train.interactions) {
        ++adj.offsets[u + 1];
        ++adj.offsets[m + i + 1];
    }
    for (std::size_t r = 0; r < m + n; ++r)
        adj.offsets[r + 1] += adj.offsets[r];
    adj.cols.resize(2 * train.interactions.size());
    adj.vals.resize(2 * train.interactions.size());
    std::vector<std::size_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
    for (const auto& [u, i] : train.interactions) {
        const double w = 1.0 / std::sqrt(static_cast<double>(user_deg[u]) *
                                         static_cast<double>(item_deg[i]));
        adj.cols[cursor[u]] = static_cast<std::uint32_t>(m + i);
        adj.vals[cursor[u]++] = w;
        adj.cols[cursor[m + i]] = u;
        adj.vals[cursor[m + i]++] = w;
    }
    // interactions are sorted by (user, item), so user rows come out sorted by
    // column; item rows likewise because users are visited in ascending order
    return adj;
}

Mat adj_multiply(const NormalizedAdjacency& adj, const Mat& in) {
    if (in.rows() != adj.size())
        throw ShapeError("adj_multiply: expected " + std::to_string(adj.size()) +
                         " rows, got " + std::to_string(in.rows()));
    const std::size_t d = in.cols();
    Mat out(in.rows(), d);
    for (std::size_t r = 0; r < in.rows(); ++r) {
        auto dst = out.row(r);
        for (std::size_t k = adj.offsets[r]; k < adj.offsets[r + 1]; ++k)
            axpy(adj.vals[k], in.row(adj.cols[k]), dst);
    }
    return out;
}

Mat propagate(const Mat& emb0, const NormalizedAdjacency& adj, std::size_t layers) {
    if (layers == 0)
        return emb0;
    Mat acc = emb0;
    Mat cur = emb0;
    for (std::size_t l = 1; l <= layers; ++l) {
        cur = adj_multiply(adj, cur);
        for (std::size_t k = 0; k < acc.storage().size(); ++k)
            acc.storage()[k] += cur.storage()[k];
    }
    const double inv = 1.0 / static_cast<double>(layers + 1);
    for (double& v : acc.storage())
        v *= inv;
    return acc;
}

namespace {

Mat stack(const Mat& top, const Mat& bottom) {
    Mat out(top.rows() + bottom.rows(), top.cols());
    std::copy(top.storage().begin(), top.storage().end(), out.storage().begin());
    std::copy(bottom.storage().begin(), bottom.storage().end(),
              out.storage().begin() + static_cast<std::ptrdiff_t>(top.storage().size()));
    return out;
}

void unstack(const Mat& stacked, Mat& top, Mat& bottom) {
    std::copy(stacked.storage().begin(),
              stacked.storage().begin() + static_cast<std::ptrdiff_t>(top.storage().size()),
              top.storage().begin());
    std::copy(stacked.storage().begin() + static_cast<std::ptrdiff_t>(top.storage().size()),
              stacked.storage().end(), bottom.storage().begin());
}

} // namespace

FinalReps compute_final(const EmbeddingState& state, const BackboneConfig& cfg,
                        const NormalizedAdjacency* adj) {
    if (cfg.kind == BackboneKind::kBPRMF || cfg.layers == 0)
        return FinalReps{state.user_emb, state.item_emb};
    if (adj == nullptr)
        throw ShapeError("lightgcn backbone requires an adjacency");
    const Mat stacked = propagate(stack(state.user_emb, state.item_emb), *adj, cfg.layers);
    FinalReps reps;
    reps.user = Mat(state.num_users(), state.dim());
    reps.item = Mat(state.num_items(), state.dim());
    unstack(stacked, reps.user, reps.item);
    return reps;
}

void backbone_backward(const BackboneConfig& cfg, const NormalizedAdjacency* adj,
                       const Mat& grad_user_final, const Mat& grad_item_final,
                       Mat& grad_user_ego, Mat& grad_item_ego) {
    if (cfg.kind == BackboneKind::kBPRMF || cfg.layers == 0) {
        for (std::size_t k = 0; k < grad_user_final.storage().size(); ++k)
            grad_user_ego.storage()[k] += grad_user_final.storage()[k];
        for (std::size_t k = 0; k < grad_item_final.storage().size(); ++k)
            grad_item_ego.storage()[k] += grad_item_final.storage()[k];
        return;
    }
    if (adj == nullptr)
        throw ShapeError("lightgcn backbone requires an adjacency");
    const Mat stacked =
        propagate(stack(grad_user_final, grad_item_final), *adj, cfg.layers);
    Mat gu(grad_user_final.rows(), grad_user_final.cols());
    Mat gi(grad_item_final.rows(), grad_item_final.cols());
    unstack(stacked, gu, gi);
    for (std::size_t k = 0; k < gu.storage().size(); ++k)
        grad_user_ego.storage()[k] += gu.storage()[k];
    for (std::size_t k = 0; k < gi.storage().size(); ++k)
        grad_item_ego.storage()[k] += gi.storage()[k];
}

std::vector<double> score_all(std::uint32_t u, const FinalReps& reps) {
    if (u >= reps.user.rows())
        throw ShapeError("score_all: user index out of range");
    std::vector<double> out(reps.item.rows());
    auto z = reps.user.row(u);
    for (std::size_t i = 0; i < reps.item.rows(); ++i)
        out[i] = dot(z, reps.item.row(i));
    return out;
}

} // namespace aurl
