#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "aurl/backbone.hpp"
#include "aurl/dataset.hpp"
#include "aurl/embeddings.hpp"
#include "aurl/losses.hpp"
#include "aurl/rng.hpp"

namespace aurl {

struct TrainConfig {
    std::size_t batch_size = 2048;
    double lr = 0.001;
    std::size_t epochs_max = 200;
    std::size_t patience = 10;
    double lambda1 = 0.0; // alignment weight
    double lambda2 = 0.0; // uniformity weight
    double lambda = 1e-4; // L2 weight
    std::size_t dim = 64;
    std::size_t neg_per_pos = 1;
    std::uint64_t seed = 0;
    BackboneConfig backbone;
    KernelConfig kernel;
    std::size_t align_sample_cap = 512;
    double top_fraction = 0.2;
};

void validate_config(const TrainConfig& cfg);

struct TrainBatch {
    std::vector<std::uint32_t> users, pos_items, neg_items; // parallel triples
    std::vector<std::uint32_t> align_users_pop, align_users_tail;
    std::vector<std::uint32_t> align_items_pop, align_items_tail;
    std::vector<std::uint32_t> uniform_users, uniform_items; // sorted, unique

    std::size_t size() const noexcept { return users.size(); }
};

// Uniform over the items the user has not interacted with, by rejection.
std::uint32_t sample_negative(const InteractionSet& train, std::uint32_t u, Rng& rng);

// One epoch worth of batches: training pairs shuffled once and chunked; every
// chunk carries negatives, uniformity index sets (unique batch entities) and
// alignment samples (up to align_sample_cap per group per side, whole group
// when smaller). Alignment sets are drawn for every batch regardless of the
// lambdas so matched-seed configs see identical batch streams.
std::vector<TrainBatch> make_batches(const InteractionSet& train,
                                     const GroupAssignment& groups,
                                     const TrainConfig& cfg, Rng& rng);

struct AdamState {
    Mat m_user, v_user, m_item, v_item;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(std::size_t num_users, std::size_t num_items, std::size_t dim)
        : m_user(num_users, dim), v_user(num_users, dim),
          m_item(num_items, dim), v_item(num_items, dim) {}
};

// Bias-corrected Adam over both matrices with one shared step counter. Rows
// whose gradient is identically zero are left untouched, moments included.
void adam_step(EmbeddingState& state, const Mat& grad_user, const Mat& grad_item,
               AdamState& adam, double lr);

// Quantities held constant within one optimization step so that the objective
// is a well-defined function of the parameters: the kernel bandwidths, the
// popular-group sample representations (the stop-gradient side of Eq. 13) and
// an ego snapshot whose popular rows patch the alignment-term propagation.
struct StepFreeze {
    Mat user_ego, item_ego;
    Mat user_pop_norm, item_pop_norm;
    double gamma_user = 1.0;
    double gamma_item = 1.0;
};

StepFreeze make_step_freeze(const EmbeddingState& state, const TrainBatch& batch,
                            const TrainConfig& cfg, const NormalizedAdjacency* adj);

struct StepResult {
    LossBreakdown loss;
    Mat grad_user, grad_item; // gradients on the ego embeddings
};

// Evaluates the Eq. 16 objective (and optionally its gradient) for one batch.
// The alignment term treats every popular-group ego row as a constant: its
// value is computed from freeze-patched representations and its gradient to
// popular rows is identically zero.
StepResult compute_step(const EmbeddingState& state, const TrainBatch& batch,
                        const TrainConfig& cfg, const GroupAssignment& groups,
                        const NormalizedAdjacency* adj, const StepFreeze& freeze,
                        bool want_grad);

struct EpochLog {
    std::size_t epoch = 0;
    LossBreakdown loss; // batch-size-weighted mean over the epoch
    double val_ndcg = 0.0;
    double elapsed_s = 0.0;
};

struct FitObserver {
    std::function<void(const EpochLog&)> on_epoch;
    std::function<void(const EmbeddingState&, const EpochLog&)> on_improved;
};

struct FitResult {
    EmbeddingState state; // best-validation snapshot
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_val_ndcg = 0.0;
};

FitResult fit(const Split& split, const GroupAssignment& groups,
              const TrainConfig& cfg, const FitObserver* observer = nullptr);

} // namespace aurl
