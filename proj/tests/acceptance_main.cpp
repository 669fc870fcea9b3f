// Acceptance gate for the toolkit: nine numbered criteria, one pass/fail line
// each, nonzero exit when any of them misses its stated tolerance. Criteria
// 7 and 8 share one desk-scale experiment on the built-in synthetic corpus.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aurl/backbone.hpp"
#include "aurl/dataset.hpp"
#include "aurl/embeddings.hpp"
#include "aurl/errors.hpp"
#include "aurl/eval.hpp"
#include "aurl/losses.hpp"
#include "aurl/matrix.hpp"
#include "aurl/rng.hpp"
#include "aurl/synthetic.hpp"
#include "aurl/trainer.hpp"

using namespace aurl;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!pass)
        ++failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

double urand(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream ss;
    ss << std::setprecision(prec) << v;
    return ss.str();
}

InteractionSet make_set(std::size_t m, std::size_t n,
                        std::vector<std::vector<std::uint32_t>> items) {
    InteractionSet s;
    s.num_users = m;
    s.num_items = n;
    s.user_items = std::move(items);
    s.rebuild_from_user_items();
    return s;
}

// Random bipartite graph where every user and every item has at least one
// edge, as the adjacency requires.
InteractionSet random_graph(std::size_t m, std::size_t n, std::size_t extras, Rng& rng) {
    std::vector<char> edge(m * n, 0);
    for (std::size_t u = 0; u < m; ++u)
        edge[u * n + uniform_below(rng, n)] = 1;
    for (std::size_t i = 0; i < n; ++i)
        edge[uniform_below(rng, m) * n + i] = 1;
    for (std::size_t e = 0; e < extras; ++e)
        edge[uniform_below(rng, m) * n + uniform_below(rng, n)] = 1;
    std::vector<std::vector<std::uint32_t>> items(m);
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t i = 0; i < n; ++i)
            if (edge[u * n + i])
                items[u].push_back(static_cast<std::uint32_t>(i));
    return make_set(m, n, std::move(items));
}

// ---------------------------------------------------------------------------
// criterion 1: analytic gradients of the full objective vs central differences
// ---------------------------------------------------------------------------

void criterion_gradients() {
    Timer timer;
    double max_err = 0.0;
    const std::size_t m = 20, n = 30, d = 8;
    struct Combo {
        BackboneKind kind;
        std::size_t layers;
    };
    const Combo combos[] = {{BackboneKind::kBPRMF, 0},
                            {BackboneKind::kLightGCN, 0},
                            {BackboneKind::kLightGCN, 2}};
    for (int inst = 0; inst < 100; ++inst) {
        Rng graph_rng(sub_seed(111, static_cast<std::uint64_t>(inst)));
        const InteractionSet train = random_graph(m, n, 60, graph_rng);
        const PopularityTable pop = compute_popularity(train);
        const GroupAssignment groups = assign_groups(pop, 0.2);
        const NormalizedAdjacency adj = build_normalized_adjacency(train);

        EmbeddingState state =
            init_state(m, n, d, sub_seed(222, static_cast<std::uint64_t>(inst)));
        for (const Combo& combo : combos) {
            TrainConfig cfg;
            cfg.dim = d;
            cfg.batch_size = 64;
            cfg.lambda1 = 0.07;
            cfg.lambda2 = 0.05;
            cfg.lambda = 0.01;
            cfg.backbone.kind = combo.kind;
            cfg.backbone.layers = combo.layers;
            const NormalizedAdjacency* adj_ptr =
                combo.kind == BackboneKind::kLightGCN ? &adj : nullptr;

            Rng batch_rng(sub_seed(333, static_cast<std::uint64_t>(inst)));
            const auto batches = make_batches(train, groups, cfg, batch_rng);
            const TrainBatch& batch = batches.front();
            const StepFreeze freeze = make_step_freeze(state, batch, cfg, adj_ptr);
            const StepResult res =
                compute_step(state, batch, cfg, groups, adj_ptr, freeze, true);
            const double err = finite_difference_check(
                [&]() {
                    return compute_step(state, batch, cfg, groups, adj_ptr, freeze, false)
                        .loss.total;
                },
                {{&state.user_emb, &res.grad_user}, {&state.item_emb, &res.grad_item}},
                1e-5);
            max_err = std::max(max_err, err);
        }
    }
    const double elapsed = timer.s();
    const bool pass = max_err < 1e-4 && elapsed < 60.0;
    report(1, "gradient correctness", pass,
           "max rel err " + fmt(max_err, 3) + " (tol 1e-4) over 100 instances x 3 "
           "backbone settings in " + fmt(elapsed, 3) + " s (limit 60)");
}

// ---------------------------------------------------------------------------
// criterion 2: mmd_sq against the explicit Gram-matrix expansion
// ---------------------------------------------------------------------------

void criterion_mmd_oracle() {
    Rng rng(sub_seed(2, 0));
    double max_diff = 0.0;
    double max_self = 0.0;
    double min_value = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + uniform_below(rng, 64);
        const std::size_t m = 1 + uniform_below(rng, 64);
        const std::size_t d = 1 + uniform_below(rng, 8);
        const double gamma = urand(rng, 0.05, 2.0);
        Mat x(n, d), y(m, d);
        for (double& v : x.storage())
            v = urand(rng, -1.0, 1.0);
        for (double& v : y.storage())
            v = urand(rng, -1.0, 1.0);

        auto kmean = [gamma](const Mat& a, const Mat& b) {
            double s = 0.0;
            for (std::size_t i = 0; i < a.rows(); ++i)
                for (std::size_t j = 0; j < b.rows(); ++j)
                    s += std::exp(-gamma * sq_dist(a.row(i), b.row(j)));
            return s / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
        };
        const double oracle = kmean(x, x) + kmean(y, y) - 2.0 * kmean(x, y);
        const double got = mmd_sq(x, y, gamma);
        max_diff = std::max(max_diff, std::abs(got - oracle));
        min_value = std::min(min_value, got);
        max_self = std::max(max_self, mmd_sq(x, x, gamma));
    }
    const bool pass = max_diff <= 1e-10 && max_self <= 1e-12 && min_value >= -1e-12;
    report(2, "mmd gram oracle", pass,
           "200 pairs, max |mmd - oracle| " + fmt(max_diff, 3) + " (tol 1e-10), "
           "max self-mmd " + fmt(max_self, 3) + " (tol 1e-12), min value " +
           fmt(min_value, 3) + " (floor -1e-12)");
}

// ---------------------------------------------------------------------------
// criterion 3: stop-gradient isolation under pure alignment pressure
// ---------------------------------------------------------------------------

// The full objective always carries the recommendation term, so the pure
// alignment gradient is isolated by differencing two evaluations of the same
// batch and freeze that differ only in lambda1. Everything outside the
// alignment term is computed bit-identically in both calls and cancels
// exactly, leaving zero on every popular row by the stop-gradient.
void criterion_stop_gradient() {
    struct Combo {
        BackboneKind kind;
        std::size_t layers;
        const char* name;
    };
    const Combo combos[] = {{BackboneKind::kBPRMF, 0, "bprmf"},
                            {BackboneKind::kLightGCN, 2, "lightgcn"}};
    bool pass = true;
    std::string detail;
    for (const Combo& combo : combos) {
        Rng graph_rng(sub_seed(3, 99));
        const std::size_t m = 30, n = 40, d = 8;
        const InteractionSet train = random_graph(m, n, 100, graph_rng);
        const PopularityTable pop = compute_popularity(train);
        const GroupAssignment groups = assign_groups(pop, 0.2);
        NormalizedAdjacency adj_storage;
        const NormalizedAdjacency* adj = nullptr;
        if (combo.kind == BackboneKind::kLightGCN) {
            adj_storage = build_normalized_adjacency(train);
            adj = &adj_storage;
        }

        TrainConfig with_align;
        with_align.dim = d;
        with_align.batch_size = 64;
        with_align.lambda1 = 1.0;
        with_align.lambda2 = 0.0;
        with_align.lambda = 0.0;
        with_align.lr = 0.01;
        with_align.backbone.kind = combo.kind;
        with_align.backbone.layers = combo.layers;
        TrainConfig without_align = with_align;
        without_align.lambda1 = 0.0;

        EmbeddingState state = init_state(m, n, d, 404);
        const Mat user_before = state.user_emb;
        const Mat item_before = state.item_emb;
        AdamState adam(m, n, d);

        for (int step = 0; step < 100; ++step) {
            Rng rng(sub_seed(31, static_cast<std::uint64_t>(step)));
            const auto batches = make_batches(train, groups, with_align, rng);
            const TrainBatch& batch = batches.front();
            const StepFreeze freeze = make_step_freeze(state, batch, with_align, adj);
            StepResult full =
                compute_step(state, batch, with_align, groups, adj, freeze, true);
            const StepResult rest =
                compute_step(state, batch, without_align, groups, adj, freeze, true);
            for (std::size_t k = 0; k < full.grad_user.storage().size(); ++k)
                full.grad_user.storage()[k] -= rest.grad_user.storage()[k];
            for (std::size_t k = 0; k < full.grad_item.storage().size(); ++k)
                full.grad_item.storage()[k] -= rest.grad_item.storage()[k];
            adam_step(state, full.grad_user, full.grad_item, adam, with_align.lr);
        }

        auto row_equal = [](const Mat& a, const Mat& b, std::size_t r) {
            return std::equal(a.row(r).begin(), a.row(r).end(), b.row(r).begin());
        };
        std::size_t popular_moved = 0;
        std::size_t tail_moved = 0;
        for (std::size_t r = 0; r < m; ++r) {
            const bool same = row_equal(state.user_emb, user_before, r);
            if (groups.user_group[r] == Group::kPopular)
                popular_moved += same ? 0 : 1;
            else
                tail_moved += same ? 0 : 1;
        }
        for (std::size_t r = 0; r < n; ++r) {
            const bool same = row_equal(state.item_emb, item_before, r);
            if (groups.item_group[r] == Group::kPopular)
                popular_moved += same ? 0 : 1;
            else
                tail_moved += same ? 0 : 1;
        }
        const bool combo_pass = popular_moved == 0 && tail_moved >= 1;
        pass = pass && combo_pass;
        if (!detail.empty())
            detail += "; ";
        detail += std::string(combo.name) + ": " + std::to_string(popular_moved) +
                  " popular rows moved (need 0), " + std::to_string(tail_moved) +
                  " tail rows moved (need >= 1)";
    }
    report(3, "stop-gradient isolation", pass, "100 align-only steps, " + detail);
}

// ---------------------------------------------------------------------------
// criterion 4: uniformity descent reaches the evenly-spaced optimum on S^1
// ---------------------------------------------------------------------------

void criterion_uniformity_optimum() {
    const std::size_t n = 100;
    const double t = 2.0;
    const double pi = std::acos(-1.0);

    // oracle: evenly spaced points, chord^2 = 2 - 2 cos(angle difference)
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double delta = 2.0 * pi * static_cast<double>(b - a) / double(n);
            sum += std::exp(-t * (2.0 - 2.0 * std::cos(delta)));
            ++pairs;
        }
    const double oracle = std::log(sum / static_cast<double>(pairs));

    // clumped start on a quarter arc so the descent has real work to do
    Rng rng(sub_seed(4, 0));
    Mat pts(n, 2);
    for (std::size_t r = 0; r < n; ++r) {
        const double theta = 0.5 * pi * uniform_unit(rng);
        pts(r, 0) = std::cos(theta);
        pts(r, 1) = std::sin(theta);
    }

    double value = 0.0;
    bool in_bounds = true;
    const double lr = 1.0;
    for (int iter = 0; iter < 8000; ++iter) {
        Mat grad;
        value = uniformity_side_with_grad(pts, t, grad);
        in_bounds = in_bounds && value <= 1e-9 && value >= -8.0 - 1e-9;
        for (std::size_t r = 0; r < n; ++r) {
            axpy(-lr, grad.row(r), pts.row(r));
            const double norm = std::sqrt(sq_norm(pts.row(r)));
            if (norm > 0.0)
                for (double& v : pts.row(r))
                    v /= norm;
        }
    }
    value = uniformity_side(pts, t);
    in_bounds = in_bounds && value <= 1e-9 && value >= -8.0 - 1e-9;

    const double gap = std::abs(value - oracle);
    const bool pass = gap <= 0.05 * std::abs(oracle) && in_bounds;
    report(4, "uniformity optimum", pass,
           "final " + fmt(value, 6) + " vs evenly-spaced oracle " + fmt(oracle, 6) +
           " (gap " + fmt(gap / std::abs(oracle) * 100.0, 3) + "%, tol 5%), bounds [-8,0] " +
           (in_bounds ? "held" : "violated"));
}

// ---------------------------------------------------------------------------
// criterion 5: ranking-metric oracles
// ---------------------------------------------------------------------------

bool contains(const std::vector<std::uint32_t>& v, std::uint32_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

double brute_ndcg(const std::vector<double>& scores,
                  const std::vector<std::uint32_t>& train_items,
                  const std::vector<std::uint32_t>& test_items, std::size_t k) {
    std::vector<std::uint32_t> cand;
    for (std::uint32_t i = 0; i < scores.size(); ++i)
        if (!contains(train_items, i))
            cand.push_back(i);
    std::stable_sort(cand.begin(), cand.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b])
            return scores[a] > scores[b];
        return a < b;
    });
    double dcg = 0.0;
    for (std::size_t p = 1; p <= std::min(k, cand.size()); ++p)
        if (contains(test_items, cand[p - 1]))
            dcg += 1.0 / std::log2(static_cast<double>(p) + 1.0);
    double idcg = 0.0;
    for (std::size_t j = 1; j <= std::min(k, test_items.size()); ++j)
        idcg += 1.0 / std::log2(static_cast<double>(j) + 1.0);
    return dcg / idcg;
}

std::vector<double> slow_average_ranks(const std::vector<double>& v) {
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i])
                ++less;
            else if (v[j] == v[i])
                ++equal;
        }
        ranks[i] = static_cast<double>(less) + 0.5 * static_cast<double>(equal - 1) + 1.0;
    }
    return ranks;
}

double slow_spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    const auto rx = slow_average_ranks(xs);
    const auto ry = slow_average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

bool has_variance(const std::vector<double>& v) {
    for (double x : v)
        if (x != v[0])
            return true;
    return false;
}

void criterion_metric_oracles() {
    // NDCG against brute force on every test subset of up to 8 items
    Rng rng(sub_seed(5, 0));
    std::size_t ndcg_checks = 0, ndcg_misses = 0;
    for (std::size_t n = 1; n <= 8; ++n) {
        for (int variant = 0; variant < 4; ++variant) {
            std::vector<double> scores(n);
            const bool tied = variant % 2 == 1;
            for (double& s : scores)
                s = tied ? 0.5 * static_cast<double>(uniform_below(rng, 3))
                         : uniform_unit(rng);
            for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
                std::vector<std::uint32_t> test_items;
                std::vector<std::uint32_t> rest;
                for (std::uint32_t i = 0; i < n; ++i) {
                    if (mask & (1u << i))
                        test_items.push_back(i);
                    else
                        rest.push_back(i);
                }
                std::vector<std::uint32_t> train_items;
                if (variant >= 2)
                    for (std::uint32_t i : rest)
                        if (uniform_below(rng, 2) == 0)
                            train_items.push_back(i);
                for (std::size_t k = 1; k <= n; ++k) {
                    const RankedList list = rank_items(0, scores, train_items);
                    const double got = ndcg_at_k(list, test_items, k);
                    const double want = brute_ndcg(scores, train_items, test_items, k);
                    ++ndcg_checks;
                    if (got != want)
                        ++ndcg_misses;
                }
            }
        }
    }

    // spearman against the quadratic average-rank implementation
    double spearman_err = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + uniform_below(rng, 39);
        std::vector<double> xs(n), ys(n);
        do {
            for (double& v : xs)
                v = trial % 2 == 0 ? uniform_unit(rng)
                                   : static_cast<double>(uniform_below(rng, 4));
        } while (!has_variance(xs));
        do {
            for (double& v : ys)
                v = trial % 2 == 0 ? uniform_unit(rng)
                                   : static_cast<double>(uniform_below(rng, 4));
        } while (!has_variance(ys));
        spearman_err =
            std::max(spearman_err, std::abs(spearman(xs, ys) - slow_spearman(xs, ys)));
    }

    // jsd identities
    double jsd_err = std::abs(jsd(std::vector<double>{1.0, 0.0},
                                  std::vector<double>{0.0, 1.0}) - 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> p(20);
        double total = 0.0;
        for (double& v : p) {
            v = uniform_unit(rng) + 1e-3;
            total += v;
        }
        for (double& v : p)
            v /= total;
        jsd_err = std::max(jsd_err, std::abs(jsd(p, p)));
    }

    // PRU hits exactly +-1 for popularity-descending / ascending scorers
    const InteractionSet train = make_set(4, 7, {{0, 1, 2}, {0, 1, 5}, {0, 4}, {3}});
    const InteractionSet test = make_set(4, 7, {{5, 6}, {2, 6}, {1, 2}, {0, 1, 2}});
    const PopularityTable pop = compute_popularity(train);
    const GroupAssignment groups = assign_groups(pop, 0.2);
    EvalOptions opts;
    opts.ks = {3};
    auto pru_of = [&](double sign) {
        FinalReps reps;
        reps.user = Mat(4, 2);
        reps.item = Mat(7, 2);
        for (std::size_t u = 0; u < 4; ++u)
            reps.user(u, 0) = 1.0;
        for (std::size_t i = 0; i < 7; ++i)
            reps.item(i, 0) = sign * static_cast<double>(pop.item_pop[i]);
        return evaluate_model(reps, train, test, groups, pop, opts).pru;
    };
    const double pru_desc = pru_of(1.0);
    const double pru_asc = pru_of(-1.0);
    const double pru_err =
        std::max(std::abs(pru_desc - 1.0), std::abs(pru_asc + 1.0));

    const bool pass =
        ndcg_misses == 0 && spearman_err <= 1e-12 && jsd_err <= 1e-12 && pru_err <= 1e-12;
    report(5, "metric oracles", pass,
           "ndcg exact on " + std::to_string(ndcg_checks - ndcg_misses) + "/" +
           std::to_string(ndcg_checks) + " brute-force instances, "
           "spearman max err " + fmt(spearman_err, 3) + ", jsd identity err " +
           fmt(jsd_err, 3) + ", pru " + fmt(pru_desc, 6) + "/" + fmt(pru_asc, 6) +
           " (want +1/-1), tol 1e-12");
}

// ---------------------------------------------------------------------------
// criterion 6: sparse propagation against the dense matrix-power oracle
// ---------------------------------------------------------------------------

void criterion_propagation_oracle() {
    Rng rng(sub_seed(6, 0));
    double max_diff = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 2 + uniform_below(rng, 24);
        const std::size_t n = 2 + uniform_below(rng, 49 - m);
        const std::size_t d = 1 + uniform_below(rng, 8);
        const std::size_t layers = uniform_below(rng, 5);
        const InteractionSet train = random_graph(m, n, m + n, rng);
        const NormalizedAdjacency adj = build_normalized_adjacency(train);
        const std::size_t s = m + n;

        std::vector<std::size_t> user_deg(m, 0), item_deg(n, 0);
        for (const auto& [u, i] : train.interactions) {
            ++user_deg[u];
            ++item_deg[i];
        }
        std::vector<double> dense(s * s, 0.0);
        for (const auto& [u, i] : train.interactions) {
            const double w = 1.0 / std::sqrt(static_cast<double>(user_deg[u]) *
                                             static_cast<double>(item_deg[i]));
            dense[u * s + (m + i)] = w;
            dense[(m + i) * s + u] = w;
        }

        Mat emb0(s, d);
        for (double& v : emb0.storage())
            v = urand(rng, -1.0, 1.0);

        Mat acc = emb0;
        Mat cur = emb0;
        for (std::size_t l = 1; l <= layers; ++l) {
            Mat next(s, d);
            for (std::size_t r = 0; r < s; ++r)
                for (std::size_t c = 0; c < s; ++c)
                    if (dense[r * s + c] != 0.0)
                        axpy(dense[r * s + c], cur.row(c), next.row(r));
            cur = next;
            for (std::size_t k = 0; k < acc.storage().size(); ++k)
                acc.storage()[k] += cur.storage()[k];
        }
        for (double& v : acc.storage())
            v /= static_cast<double>(layers + 1);

        const Mat got = propagate(emb0, adj, layers);
        for (std::size_t k = 0; k < acc.storage().size(); ++k)
            max_diff = std::max(max_diff, std::abs(got.storage()[k] - acc.storage()[k]));
    }
    const bool pass = max_diff <= 1e-8;
    report(6, "propagation oracle", pass,
           "50 random graphs, max |sparse - dense| " + fmt(max_diff, 3) + " (tol 1e-8)");
}

// ---------------------------------------------------------------------------
// criteria 7 and 8: desk-scale debiasing on the built-in synthetic corpus
// ---------------------------------------------------------------------------

struct DeskRun {
    double pru = 0.0;
    double dp = 0.0;
    double ndcg = 0.0;
    double seconds = 0.0;
};

void criterion_desk_scale() {
    const std::uint64_t seed = 42;

    SyntheticConfig scfg;
    scfg.seed = seed;
    const InteractionSet raw = generate_synthetic(scfg);
    const InteractionSet core = filter_k_core(raw, 5);
    const Split split = split_per_user(core, SplitRatios{}, seed);
    const PopularityTable pop = compute_popularity(split.train);
    const GroupAssignment groups = assign_groups(pop, 0.2);

    // Training uses the library defaults: epochs_max 200 with early stopping
    // at patience 10 on validation NDCG@20, so every variant runs to its own
    // convergence under a matched seed.
    TrainConfig base;
    base.dim = 64;
    base.batch_size = 2048;
    base.lr = 0.001;
    base.neg_per_pos = 1;
    base.lambda = 1e-4;
    base.seed = seed;

    EvalOptions opts;
    opts.ks = {20};
    opts.seed = seed;

    auto run = [&](double l1, double l2) {
        Timer timer;
        TrainConfig cfg = base;
        cfg.lambda1 = l1;
        cfg.lambda2 = l2;
        const FitResult fr = fit(split, groups, cfg);
        const FinalReps reps = compute_final(fr.state, cfg.backbone, nullptr);
        const MetricReport rep =
            evaluate_model(reps, split.train, split.test, groups, pop, opts);
        DeskRun out;
        out.pru = rep.pru;
        out.dp = rep.per_k.at(20).dp;
        out.ndcg = rep.per_k.at(20).ndcg;
        out.seconds = timer.s();
        return out;
    };

    const DeskRun baseline = run(0.0, 0.0);
    const DeskRun full = run(0.1, 0.1);
    const DeskRun align_only = run(0.1, 0.0);
    const DeskRun uniform_only = run(0.0, 0.1);

    const double pru_drop = (baseline.pru - full.pru) / std::abs(baseline.pru);
    const double dp_drop = (baseline.dp - full.dp) / std::abs(baseline.dp);
    const double ndcg_shift = std::abs(full.ndcg - baseline.ndcg) / baseline.ndcg;
    const double pair_seconds = baseline.seconds + full.seconds;

    const bool pass7 = pru_drop >= 0.10 && dp_drop >= 0.05 && ndcg_shift <= 0.10 &&
                       pair_seconds < 900.0;
    report(7, "desk-scale debiasing", pass7,
           "pru " + fmt(baseline.pru) + " -> " + fmt(full.pru) + " (drop " +
           fmt(pru_drop * 100.0, 3) + "%, need >= 10%), dp@20 " + fmt(baseline.dp) +
           " -> " + fmt(full.dp) + " (drop " + fmt(dp_drop * 100.0, 3) +
           "%, need >= 5%), ndcg@20 " + fmt(baseline.ndcg) + " -> " + fmt(full.ndcg) +
           " (shift " + fmt(ndcg_shift * 100.0, 3) + "%, cap 10%), " +
           fmt(pair_seconds, 4) + " s (limit 900)");

    const double best_single = std::min(align_only.pru, uniform_only.pru);
    const bool pass8 = align_only.pru < baseline.pru && uniform_only.pru < baseline.pru &&
                       full.pru <= best_single + 0.05 * std::abs(best_single);
    report(8, "ablation consistency", pass8,
           "pru baseline " + fmt(baseline.pru) + ", align-only " + fmt(align_only.pru) +
           ", uniform-only " + fmt(uniform_only.pru) + ", full " + fmt(full.pru) +
           " (must be <= " + fmt(best_single + 0.05 * std::abs(best_single)) + ")");
}

// ---------------------------------------------------------------------------
// criterion 9: end-to-end reproducibility
// ---------------------------------------------------------------------------

double report_max_diff(const MetricReport& a, const MetricReport& b) {
    if (a.num_users != b.num_users || a.num_items != b.num_items ||
        a.evaluated_users != b.evaluated_users ||
        a.pru_evaluated_users != b.pru_evaluated_users ||
        a.pru_skipped_users != b.pru_skipped_users || a.per_k.size() != b.per_k.size())
        return 1e9;
    double mx = 0.0;
    auto upd = [&](double x, double y) { mx = std::max(mx, std::abs(x - y)); };
    upd(a.pru, b.pru);
    upd(a.loss_gap, b.loss_gap);
    upd(a.score_gap, b.score_gap);
    upd(a.exposure_test_baseline_popular, b.exposure_test_baseline_popular);
    upd(a.exposure_test_baseline_tail, b.exposure_test_baseline_tail);
    for (const auto& [k, ma] : a.per_k) {
        if (b.per_k.count(k) == 0)
            return 1e9;
        const PerKMetrics& mb = b.per_k.at(k);
        upd(ma.hr, mb.hr);
        upd(ma.ndcg, mb.ndcg);
        upd(ma.hr_popular, mb.hr_popular);
        upd(ma.hr_tail, mb.hr_tail);
        upd(ma.ndcg_popular, mb.ndcg_popular);
        upd(ma.ndcg_tail, mb.ndcg_tail);
        upd(ma.dp, mb.dp);
        upd(ma.exposure_popular, mb.exposure_popular);
        upd(ma.exposure_tail, mb.exposure_tail);
    }
    return mx;
}

void criterion_reproducibility() {
    auto pipeline = []() {
        const std::uint64_t seed = 4040;
        SyntheticConfig scfg;
        scfg.num_users = 400;
        scfg.num_items = 300;
        scfg.num_interactions = 8000;
        scfg.seed = seed;
        const InteractionSet core = filter_k_core(generate_synthetic(scfg), 3);
        const Split split = split_per_user(core, SplitRatios{}, seed);
        const PopularityTable pop = compute_popularity(split.train);
        const GroupAssignment groups = assign_groups(pop, 0.2);

        TrainConfig cfg;
        cfg.dim = 16;
        cfg.batch_size = 1024;
        cfg.lr = 0.01;
        cfg.lambda1 = 0.1;
        cfg.lambda2 = 0.1;
        cfg.lambda = 1e-4;
        cfg.epochs_max = 6;
        cfg.patience = 6;
        cfg.seed = seed;
        cfg.align_sample_cap = 256;
        const FitResult fr = fit(split, groups, cfg);
        const FinalReps reps = compute_final(fr.state, cfg.backbone, nullptr);
        EvalOptions opts;
        opts.ks = {10, 20};
        opts.seed = seed;
        return evaluate_model(reps, split.train, split.test, groups, pop, opts);
    };
    const MetricReport first = pipeline();
    const MetricReport second = pipeline();
    const double diff = report_max_diff(first, second);
    const bool pass = diff <= 1e-9;
    report(9, "reproducibility", pass,
           "two serial end-to-end runs, max report field diff " + fmt(diff, 3) +
           " (tol 1e-9)");
}

} // namespace

int main() {
    std::printf("acceptance suite\n");
    std::fflush(stdout);
    struct Entry {
        int id;
        const char* name;
        void (*fn)();
    };
    const Entry entries[] = {
        {1, "gradient correctness", criterion_gradients},
        {2, "mmd gram oracle", criterion_mmd_oracle},
        {3, "stop-gradient isolation", criterion_stop_gradient},
        {4, "uniformity optimum", criterion_uniformity_optimum},
        {5, "metric oracles", criterion_metric_oracles},
        {6, "propagation oracle", criterion_propagation_oracle},
        {7, "desk-scale debiasing (and 8: ablation)", criterion_desk_scale},
        {9, "reproducibility", criterion_reproducibility},
    };
    for (const Entry& e : entries) {
        try {
            e.fn();
        } catch (const std::exception& ex) {
            report(e.id, e.name, false, std::string("exception: ") + ex.what());
        }
    }
    if (failures == 0) {
        std::printf("result: all criteria passed\n");
        return 0;
    }
    std::printf("result: %d criterion check(s) failed\n", failures);
    return 1;
}
