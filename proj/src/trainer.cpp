#include "aurl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "aurl/errors.hpp"
#include "aurl/eval.hpp"

namespace aurl {

void validate_config(const TrainConfig& cfg) {
    if (cfg.batch_size < 1)
        throw ParseError("batch_size must be >= 1");
    if (cfg.lr <= 0.0)
        throw ParseError("lr must be positive");
    if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0 || cfg.lambda < 0.0)
        throw ParseError("loss weights must be nonnegative");
    if (cfg.dim < 1)
        throw ParseError("dim must be >= 1");
    if (cfg.neg_per_pos < 1)
        throw ParseError("neg_per_pos must be >= 1");
    if (cfg.backbone.layers > 4)
        throw ParseError("layers must lie in 0..4");
    if (cfg.kernel.t <= 0.0)
        throw ParseError("uniformity temperature t must be positive");
    if (cfg.kernel.gamma <= 0.0)
        throw ParseError("kernel gamma must be positive");
    if (cfg.align_sample_cap < 1)
        throw ParseError("align_sample_cap must be >= 1");
    if (cfg.top_fraction < 0.0 || cfg.top_fraction > 1.0)
        throw ParseError("top_fraction must lie in [0, 1]");
    if (cfg.epochs_max < 1)
        throw ParseError("epochs_max must be >= 1");
}

std::uint32_t sample_negative(const InteractionSet& train, std::uint32_t u, Rng& rng) {
    const auto& owned = train.user_items[u];
    if (owned.size() >= train.num_items)
        throw SamplingError("user " + std::to_string(u) +
                            " has interacted with every item; no negative exists");
    for (;;) {
        const auto cand = static_cast<std::uint32_t>(uniform_below(rng, train.num_items));
        if (!std::binary_search(owned.begin(), owned.end(), cand))
            return cand;
    }
}

namespace {

std::vector<std::uint32_t> sample_without_replacement(
    const std::vector<std::uint32_t>& src, std::size_t cap, Rng& rng) {
    if (src.size() <= cap)
        return src;
    std::vector<std::uint32_t> pool = src;
    for (std::size_t i = 0; i < cap; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(uniform_below(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(cap);
    return pool;
}

std::vector<std::uint32_t> sorted_unique(std::vector<std::uint32_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

std::vector<TrainBatch> make_batches(const InteractionSet& train,
                                     const GroupAssignment& groups,
                                     const TrainConfig& cfg, Rng& rng) {
    auto pairs = train.interactions;
    shuffle_vec(pairs, rng);

    const auto pop_users = groups.users_in(Group::kPopular);
    const auto tail_users = groups.users_in(Group::kTail);
    const auto pop_items = groups.items_in(Group::kPopular);
    const auto tail_items = groups.items_in(Group::kTail);

    std::vector<TrainBatch> batches;
    for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(start + cfg.batch_size, pairs.size());
        TrainBatch b;
        b.users.reserve((stop - start) * cfg.neg_per_pos);
        for (std::size_t p = start; p < stop; ++p) {
            const auto [u, i] = pairs[p];
            for (std::size_t r = 0; r < cfg.neg_per_pos; ++r) {
                b.users.push_back(u);
                b.pos_items.push_back(i);
                b.neg_items.push_back(sample_negative(train, u, rng));
            }
        }
        b.uniform_users = sorted_unique(b.users);
        auto items = b.pos_items;
        items.insert(items.end(), b.neg_items.begin(), b.neg_items.end());
        b.uniform_items = sorted_unique(std::move(items));
        b.align_users_pop = sample_without_replacement(pop_users, cfg.align_sample_cap, rng);
        b.align_users_tail = sample_without_replacement(tail_users, cfg.align_sample_cap, rng);
        b.align_items_pop = sample_without_replacement(pop_items, cfg.align_sample_cap, rng);
        b.align_items_tail = sample_without_replacement(tail_items, cfg.align_sample_cap, rng);
        batches.push_back(std::move(b));
    }
    return batches;
}

namespace {

void adam_update_matrix(Mat& param, const Mat& grad, Mat& m, Mat& v,
                        std::uint64_t step, double lr, double beta1, double beta2,
                        double eps) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    const std::size_t cols = param.cols();
    for (std::size_t r = 0; r < param.rows(); ++r) {
        auto g = grad.row(r);
        bool touched = false;
        for (double gv : g) {
            if (!std::isfinite(gv))
                throw TrainingAbort("non-finite gradient in row " + std::to_string(r));
            if (gv != 0.0)
                touched = true;
        }
        if (!touched)
            continue;
        auto pr = param.row(r);
        auto mr = m.row(r);
        auto vr = v.row(r);
        for (std::size_t c = 0; c < cols; ++c) {
            mr[c] = beta1 * mr[c] + (1.0 - beta1) * g[c];
            vr[c] = beta2 * vr[c] + (1.0 - beta2) * g[c] * g[c];
            const double mhat = mr[c] / bc1;
            const double vhat = vr[c] / bc2;
            pr[c] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

} // namespace

void adam_step(EmbeddingState& state, const Mat& grad_user, const Mat& grad_item,
               AdamState& adam, double lr) {
    ++adam.step;
    adam_update_matrix(state.user_emb, grad_user, adam.m_user, adam.v_user,
                       adam.step, lr, adam.beta1, adam.beta2, adam.eps);
    adam_update_matrix(state.item_emb, grad_item, adam.m_item, adam.v_item,
                       adam.step, lr, adam.beta1, adam.beta2, adam.eps);
}

StepFreeze make_step_freeze(const EmbeddingState& state, const TrainBatch& batch,
                            const TrainConfig& cfg, const NormalizedAdjacency* adj) {
    StepFreeze f;
    f.user_ego = state.user_emb;
    f.item_ego = state.item_emb;
    if (cfg.lambda1 <= 0.0)
        return f;
    const FinalReps reps = compute_final(state, cfg.backbone, adj);
    f.user_pop_norm = l2_normalize_rows(gather_rows(reps.user, batch.align_users_pop));
    f.item_pop_norm = l2_normalize_rows(gather_rows(reps.item, batch.align_items_pop));
    const Mat user_tail = l2_normalize_rows(gather_rows(reps.user, batch.align_users_tail));
    const Mat item_tail = l2_normalize_rows(gather_rows(reps.item, batch.align_items_tail));

    auto pooled = [](const Mat& a, const Mat& b) {
        Mat out(a.rows() + b.rows(), std::max(a.cols(), b.cols()));
        std::copy(a.storage().begin(), a.storage().end(), out.storage().begin());
        std::copy(b.storage().begin(), b.storage().end(),
                  out.storage().begin() + static_cast<std::ptrdiff_t>(a.storage().size()));
        return out;
    };
    f.gamma_user = resolve_gamma(pooled(f.user_pop_norm, user_tail), cfg.kernel);
    f.gamma_item = resolve_gamma(pooled(f.item_pop_norm, item_tail), cfg.kernel);
    return f;
}

namespace {

void scatter_add(Mat& dst, const std::vector<std::uint32_t>& rows, const Mat& src,
                 double scale) {
    for (std::size_t r = 0; r < rows.size(); ++r)
        axpy(scale, src.row(r), dst.row(rows[r]));
}

} // namespace

StepResult compute_step(const EmbeddingState& state, const TrainBatch& batch,
                        const TrainConfig& cfg, const GroupAssignment& groups,
                        const NormalizedAdjacency* adj, const StepFreeze& freeze,
                        bool want_grad) {
    if (batch.size() == 0)
        throw ShapeError("compute_step: empty batch");
    const std::size_t m = state.num_users();
    const std::size_t n = state.num_items();
    const std::size_t d = state.dim();
    const bool propagated =
        cfg.backbone.kind == BackboneKind::kLightGCN && cfg.backbone.layers > 0;

    const FinalReps reps = compute_final(state, cfg.backbone, adj);

    Mat gf_user, gf_item; // d(loss)/d(final reps), rec + uniformity parts
    if (want_grad) {
        gf_user = Mat(m, d);
        gf_item = Mat(n, d);
    }

    // recommendation term
    double rec_sum = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (std::size_t t = 0; t < batch.size(); ++t) {
        const auto u = batch.users[t];
        const auto i = batch.pos_items[t];
        const auto j = batch.neg_items[t];
        auto z = reps.user.row(u);
        const double s_pos = dot(z, reps.item.row(i));
        const double s_neg = dot(z, reps.item.row(j));
        rec_sum += bpr_term(s_pos, s_neg);
        if (want_grad) {
            const double c = bpr_grad_coeff(s_pos - s_neg) * inv_b;
            axpy(-c, reps.item.row(i), gf_user.row(u));
            axpy(c, reps.item.row(j), gf_user.row(u));
            axpy(-c, z, gf_item.row(i));
            axpy(c, z, gf_item.row(j));
        }
    }
    const double rec = rec_sum * inv_b;

    // global uniformity on the unique batch entities
    double uniform_val = 0.0;
    if (cfg.lambda2 > 0.0) {
        auto side = [&](const Mat& final_mat, const std::vector<std::uint32_t>& rows,
                        Mat& gf) {
            const Mat raw = gather_rows(final_mat, rows);
            const Mat unit = l2_normalize_rows(raw);
            if (!want_grad)
                return uniformity_side(unit, cfg.kernel.t);
            Mat g_unit;
            const double value = uniformity_side_with_grad(unit, cfg.kernel.t, g_unit);
            const Mat g_raw = l2_normalize_rows_backward(raw, g_unit);
            scatter_add(gf, rows, g_raw, cfg.lambda2 * 0.5);
            return value;
        };
        uniform_val = 0.5 * (side(reps.user, batch.uniform_users, gf_user) +
                             side(reps.item, batch.uniform_items, gf_item));
    }

    // group alignment; popular ego rows are constants (stop-gradient), so the
    // term reads tail representations from a freeze-patched propagation
    double align_val = 0.0;
    Mat ga_user, ga_item;
    if (cfg.lambda1 > 0.0) {
        const Mat* tail_user_src = &reps.user;
        const Mat* tail_item_src = &reps.item;
        FinalReps patched;
        if (propagated) {
            EmbeddingState pstate = state;
            for (std::uint32_t r = 0; r < m; ++r)
                if (groups.user_group[r] == Group::kPopular)
                    std::copy(freeze.user_ego.row(r).begin(), freeze.user_ego.row(r).end(),
                              pstate.user_emb.row(r).begin());
            for (std::uint32_t r = 0; r < n; ++r)
                if (groups.item_group[r] == Group::kPopular)
                    std::copy(freeze.item_ego.row(r).begin(), freeze.item_ego.row(r).end(),
                              pstate.item_emb.row(r).begin());
            patched = compute_final(pstate, cfg.backbone, adj);
            tail_user_src = &patched.user;
            tail_item_src = &patched.item;
        }
        const Mat user_tail_raw = gather_rows(*tail_user_src, batch.align_users_tail);
        const Mat item_tail_raw = gather_rows(*tail_item_src, batch.align_items_tail);
        const Mat user_tail = l2_normalize_rows(user_tail_raw);
        const Mat item_tail = l2_normalize_rows(item_tail_raw);
        const AlignmentResult ar = alignment_loss(
            freeze.user_pop_norm, user_tail, freeze.item_pop_norm, item_tail,
            cfg.kernel, &freeze.gamma_user, &freeze.gamma_item, want_grad);
        align_val = ar.value;
        if (want_grad) {
            Mat gaf_user(m, d), gaf_item(n, d);
            scatter_add(gaf_user, batch.align_users_tail,
                        l2_normalize_rows_backward(user_tail_raw, ar.grad_user_tail),
                        cfg.lambda1);
            scatter_add(gaf_item, batch.align_items_tail,
                        l2_normalize_rows_backward(item_tail_raw, ar.grad_item_tail),
                        cfg.lambda1);
            ga_user = Mat(m, d);
            ga_item = Mat(n, d);
            backbone_backward(cfg.backbone, adj, gaf_user, gaf_item, ga_user, ga_item);
            for (std::uint32_t r = 0; r < m; ++r)
                if (groups.user_group[r] == Group::kPopular)
                    std::fill(ga_user.row(r).begin(), ga_user.row(r).end(), 0.0);
            for (std::uint32_t r = 0; r < n; ++r)
                if (groups.item_group[r] == Group::kPopular)
                    std::fill(ga_item.row(r).begin(), ga_item.row(r).end(), 0.0);
        }
    }

    // L2 on the ego rows touched by this batch
    const double l2_val = l2_term(state.user_emb, batch.uniform_users) +
                          l2_term(state.item_emb, batch.uniform_items);

    StepResult res;
    res.loss = total_loss(rec, align_val, uniform_val, l2_val, cfg.lambda1,
                          cfg.lambda2, cfg.lambda);
    if (want_grad) {
        res.grad_user = Mat(m, d);
        res.grad_item = Mat(n, d);
        backbone_backward(cfg.backbone, adj, gf_user, gf_item, res.grad_user,
                          res.grad_item);
        if (cfg.lambda1 > 0.0) {
            for (std::size_t k = 0; k < ga_user.storage().size(); ++k)
                res.grad_user.storage()[k] += ga_user.storage()[k];
            for (std::size_t k = 0; k < ga_item.storage().size(); ++k)
                res.grad_item.storage()[k] += ga_item.storage()[k];
        }
        for (auto r : batch.uniform_users)
            axpy(2.0 * cfg.lambda, state.user_emb.row(r), res.grad_user.row(r));
        for (auto r : batch.uniform_items)
            axpy(2.0 * cfg.lambda, state.item_emb.row(r), res.grad_item.row(r));
    }
    return res;
}

FitResult fit(const Split& split, const GroupAssignment& groups,
              const TrainConfig& cfg, const FitObserver* observer) {
    validate_config(cfg);
    if (split.train.size() == 0)
        throw ShapeError("fit: empty training set");

    const std::size_t m = split.train.num_users;
    const std::size_t n = split.train.num_items;
    EmbeddingState state = init_state(m, n, cfg.dim, cfg.seed);

    NormalizedAdjacency adj_storage;
    const NormalizedAdjacency* adj = nullptr;
    if (cfg.backbone.kind == BackboneKind::kLightGCN && cfg.backbone.layers > 0) {
        adj_storage = build_normalized_adjacency(split.train);
        adj = &adj_storage;
    }

    AdamState adam(m, n, cfg.dim);
    FitResult out;
    out.best_val_ndcg = -std::numeric_limits<double>::infinity();
    const bool has_validation = split.valid.size() > 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng rng(sub_seed(cfg.seed, 0x10000 + epoch));
        const auto batches = make_batches(split.train, groups, cfg, rng);

        LossBreakdown mean{};
        double weight = 0.0;
        for (const auto& batch : batches) {
            const StepFreeze freeze = make_step_freeze(state, batch, cfg, adj);
            StepResult sr = compute_step(state, batch, cfg, groups, adj, freeze, true);
            if (!std::isfinite(sr.loss.total))
                throw TrainingAbort("non-finite loss at epoch " + std::to_string(epoch));
            adam_step(state, sr.grad_user, sr.grad_item, adam, cfg.lr);
            const double w = static_cast<double>(batch.size());
            mean.rec += w * sr.loss.rec;
            mean.align += w * sr.loss.align;
            mean.uniform += w * sr.loss.uniform;
            mean.l2 += w * sr.loss.l2;
            mean.total += w * sr.loss.total;
            weight += w;
        }
        mean.rec /= weight;
        mean.align /= weight;
        mean.uniform /= weight;
        mean.l2 /= weight;
        mean.total /= weight;
        mean.lambda1 = cfg.lambda1;
        mean.lambda2 = cfg.lambda2;
        mean.lambda = cfg.lambda;

        double val = 0.0;
        if (has_validation)
            val = mean_ndcg(compute_final(state, cfg.backbone, adj), split.train,
                            split.valid, 20);

        EpochLog entry;
        entry.epoch = epoch;
        entry.loss = mean;
        entry.val_ndcg = val;
        entry.elapsed_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.log.push_back(entry);

        if (val > out.best_val_ndcg) {
            out.best_val_ndcg = val;
            out.best_epoch = epoch;
            out.state = state;
            if (observer != nullptr && observer->on_improved)
                observer->on_improved(out.state, entry);
        }
        if (observer != nullptr && observer->on_epoch)
            observer->on_epoch(entry);

        if (epoch - out.best_epoch >= cfg.patience)
            break;
    }
    return out;
}

} // namespace aurl
