#include "aurl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "aurl/errors.hpp"
#include "aurl/rng.hpp"
#include "aurl/trainer.hpp"

#include "json.hpp"

namespace aurl {

RankedList rank_items(std::uint32_t u, const std::vector<double>& scores,
                      const std::vector<std::uint32_t>& train_items) {
    RankedList list;
    list.user = u;
    list.items.reserve(scores.size() - train_items.size());
    for (std::uint32_t i = 0; i < scores.size(); ++i)
        if (!std::binary_search(train_items.begin(), train_items.end(), i))
            list.items.push_back(i);
    std::stable_sort(list.items.begin(), list.items.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                         if (scores[a] != scores[b])
                             return scores[a] > scores[b];
                         return a < b;
                     });
    return list;
}

double hr_at_k(const RankedList& list, const std::vector<std::uint32_t>& test_items,
               std::size_t k) {
    if (test_items.empty())
        throw MetricUndefinedError("hr_at_k: empty test set");
    const std::size_t depth = std::min(k, list.items.size());
    std::size_t hits = 0;
    for (std::size_t p = 0; p < depth; ++p)
        if (std::binary_search(test_items.begin(), test_items.end(), list.items[p]))
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(test_items.size());
}

double ndcg_at_k(const RankedList& list, const std::vector<std::uint32_t>& test_items,
                 std::size_t k) {
    if (test_items.empty())
        throw MetricUndefinedError("ndcg_at_k: empty test set");
    const std::size_t depth = std::min(k, list.items.size());
    double dcg = 0.0;
    for (std::size_t p = 0; p < depth; ++p)
        if (std::binary_search(test_items.begin(), test_items.end(), list.items[p]))
            dcg += 1.0 / std::log2(static_cast<double>(p + 2));
    double idcg = 0.0;
    const std::size_t ideal = std::min(k, test_items.size());
    for (std::size_t j = 1; j <= ideal; ++j)
        idcg += 1.0 / std::log2(static_cast<double>(j + 1));
    return dcg / idcg;
}

namespace {

std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]])
            ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t)
            ranks[order[t]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0)
        throw MetricUndefinedError("correlation undefined: zero variance");
    return sab / std::sqrt(saa * sbb);
}

} // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw ShapeError("spearman: length mismatch");
    if (xs.size() < 2)
        throw MetricUndefinedError("spearman needs at least 2 observations");
    return pearson(average_ranks(xs), average_ranks(ys));
}

std::vector<double> accuracy_histogram(const std::vector<double>& values,
                                       std::size_t bins) {
    if (values.empty())
        throw MetricUndefinedError("accuracy_histogram: empty group");
    if (bins == 0)
        throw ShapeError("accuracy_histogram: bins must be >= 1");
    std::vector<double> hist(bins, 0.0);
    for (double v : values) {
        auto bin = static_cast<std::size_t>(v * static_cast<double>(bins));
        if (bin >= bins)
            bin = bins - 1; // v = 1.0 falls in the right-closed last bin
        hist[bin] += 1.0;
    }
    for (double& h : hist)
        h /= static_cast<double>(values.size());
    return hist;
}

double jsd(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw ShapeError("jsd: length mismatch");
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0)
            throw ShapeError("jsd: negative probability mass");
        sp += p[i];
        sq += q[i];
    }
    if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
        throw ShapeError("jsd: inputs must sum to 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0)
            acc += 0.5 * p[i] * std::log2(p[i] / m);
        if (q[i] > 0.0)
            acc += 0.5 * q[i] * std::log2(q[i] / m);
    }
    return acc;
}

namespace {

struct PerKAccum {
    double hr_sum = 0.0, ndcg_sum = 0.0;
    double hr_pop = 0.0, ndcg_pop = 0.0;
    double hr_tail = 0.0, ndcg_tail = 0.0;
    std::size_t pop_users = 0, tail_users = 0;
    std::vector<double> ndcg_pop_values, ndcg_tail_values;
    std::size_t pop_slots = 0, tail_slots = 0, total_slots = 0;
};

} // namespace

MetricReport evaluate_model(const FinalReps& reps, const InteractionSet& train,
                            const InteractionSet& test, const GroupAssignment& groups,
                            const PopularityTable& pop, const EvalOptions& opts) {
    MetricReport report;
    report.num_users = train.num_users;
    report.num_items = train.num_items;

    std::map<std::size_t, PerKAccum> accums;
    for (auto k : opts.ks)
        accums[k] = PerKAccum{};

    double pru_sum = 0.0;
    std::vector<std::int64_t> position(train.num_items, -1);

    for (std::uint32_t u = 0; u < train.num_users; ++u) {
        const auto& test_items = test.user_items[u];
        if (test_items.empty())
            continue;
        ++report.evaluated_users;
        const auto scores = score_all(u, reps);
        const RankedList ranked = rank_items(u, scores, train.user_items[u]);
        const bool popular_user = groups.user_group[u] == Group::kPopular;

        for (auto k : opts.ks) {
            auto& acc = accums[k];
            const double hr = hr_at_k(ranked, test_items, k);
            const double nd = ndcg_at_k(ranked, test_items, k);
            acc.hr_sum += hr;
            acc.ndcg_sum += nd;
            if (popular_user) {
                acc.hr_pop += hr;
                acc.ndcg_pop += nd;
                ++acc.pop_users;
                acc.ndcg_pop_values.push_back(nd);
            } else {
                acc.hr_tail += hr;
                acc.ndcg_tail += nd;
                ++acc.tail_users;
                acc.ndcg_tail_values.push_back(nd);
            }
            const std::size_t depth = std::min(k, ranked.items.size());
            for (std::size_t p = 0; p < depth; ++p) {
                if (groups.item_group[ranked.items[p]] == Group::kPopular)
                    ++acc.pop_slots;
                else
                    ++acc.tail_slots;
            }
            acc.total_slots += depth;
        }

        // popularity-rank correlation over the user's test items
        if (test_items.size() < 2) {
            ++report.pru_skipped_users;
        } else {
            for (std::size_t p = 0; p < ranked.items.size(); ++p)
                position[ranked.items[p]] = static_cast<std::int64_t>(p + 1);
            std::vector<double> pops, ranks;
            pops.reserve(test_items.size());
            ranks.reserve(test_items.size());
            for (auto i : test_items) {
                pops.push_back(static_cast<double>(pop.item_pop[i]));
                ranks.push_back(static_cast<double>(position[i]));
            }
            for (auto i : ranked.items)
                position[i] = -1;
            try {
                pru_sum += -spearman(pops, ranks);
                ++report.pru_evaluated_users;
            } catch (const MetricUndefinedError&) {
                ++report.pru_skipped_users;
            }
        }
    }

    if (report.evaluated_users == 0)
        throw MetricUndefinedError("evaluate_model: no users with test interactions");
    if (report.pru_evaluated_users == 0)
        throw MetricUndefinedError("evaluate_model: no users evaluable for PRU");
    report.pru = pru_sum / static_cast<double>(report.pru_evaluated_users);

    for (auto k : opts.ks) {
        auto& acc = accums[k];
        PerKMetrics m;
        const double n_eval = static_cast<double>(report.evaluated_users);
        m.hr = acc.hr_sum / n_eval;
        m.ndcg = acc.ndcg_sum / n_eval;
        if (acc.pop_users == 0 || acc.tail_users == 0)
            throw MetricUndefinedError("evaluate_model: a user group has no evaluable users");
        m.hr_popular = acc.hr_pop / static_cast<double>(acc.pop_users);
        m.hr_tail = acc.hr_tail / static_cast<double>(acc.tail_users);
        m.ndcg_popular = acc.ndcg_pop / static_cast<double>(acc.pop_users);
        m.ndcg_tail = acc.ndcg_tail / static_cast<double>(acc.tail_users);
        m.dp = jsd(accuracy_histogram(acc.ndcg_pop_values, opts.histogram_bins),
                   accuracy_histogram(acc.ndcg_tail_values, opts.histogram_bins));
        m.exposure_popular =
            static_cast<double>(acc.pop_slots) / static_cast<double>(acc.total_slots);
        m.exposure_tail =
            static_cast<double>(acc.tail_slots) / static_cast<double>(acc.total_slots);
        report.per_k[k] = m;
    }

    std::size_t test_pop = 0;
    for (const auto& [u, i] : test.interactions)
        if (groups.item_group[i] == Group::kPopular)
            ++test_pop;
    report.exposure_test_baseline_popular =
        static_cast<double>(test_pop) / static_cast<double>(test.size());
    report.exposure_test_baseline_tail = 1.0 - report.exposure_test_baseline_popular;

    report.loss_gap = loss_gap(reps, train, groups, opts.seed);
    report.score_gap = score_gap_mean(reps, groups);
    return report;
}

double mean_ndcg(const FinalReps& reps, const InteractionSet& train,
                 const InteractionSet& holdout, std::size_t k) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::uint32_t u = 0; u < train.num_users; ++u) {
        const auto& held = holdout.user_items[u];
        if (held.empty())
            continue;
        const auto scores = score_all(u, reps);
        sum += ndcg_at_k(rank_items(u, scores, train.user_items[u]), held, k);
        ++count;
    }
    if (count == 0)
        throw MetricUndefinedError("mean_ndcg: no users with holdout interactions");
    return sum / static_cast<double>(count);
}

double loss_gap(const FinalReps& reps, const InteractionSet& train,
                const GroupAssignment& groups, std::uint64_t seed) {
    double sum_pop = 0.0, sum_tail = 0.0;
    std::size_t n_pop = 0, n_tail = 0;
    Rng rng(sub_seed(seed, 0x6a9ULL));
    for (const auto& [u, i] : train.interactions) {
        const auto neg = sample_negative(train, u, rng);
        const double loss = bpr_term(dot(reps.user.row(u), reps.item.row(i)),
                                     dot(reps.user.row(u), reps.item.row(neg)));
        if (groups.user_group[u] == Group::kPopular) {
            sum_pop += loss;
            ++n_pop;
        } else {
            sum_tail += loss;
            ++n_tail;
        }
    }
    if (n_pop == 0 || n_tail == 0)
        throw MetricUndefinedError("loss_gap: a user group has no training triples");
    return sum_pop / static_cast<double>(n_pop) - sum_tail / static_cast<double>(n_tail);
}

ExposureReport group_exposure(const FinalReps& reps, const InteractionSet& train,
                              const InteractionSet& test, const GroupAssignment& groups,
                              std::size_t k) {
    ExposureReport out;
    std::size_t pop_slots = 0, total_slots = 0;
    for (std::uint32_t u = 0; u < train.num_users; ++u) {
        const auto scores = score_all(u, reps);
        const RankedList ranked = rank_items(u, scores, train.user_items[u]);
        const std::size_t depth = std::min(k, ranked.items.size());
        for (std::size_t p = 0; p < depth; ++p)
            if (groups.item_group[ranked.items[p]] == Group::kPopular)
                ++pop_slots;
        total_slots += depth;
    }
    if (total_slots == 0)
        throw MetricUndefinedError("group_exposure: no ranked slots");
    out.popular = static_cast<double>(pop_slots) / static_cast<double>(total_slots);
    out.tail = static_cast<double>(total_slots - pop_slots) /
               static_cast<double>(total_slots);
    if (test.size() > 0) {
        std::size_t test_pop = 0;
        for (const auto& [u, i] : test.interactions)
            if (groups.item_group[i] == Group::kPopular)
                ++test_pop;
        out.test_baseline_popular =
            static_cast<double>(test_pop) / static_cast<double>(test.size());
        out.test_baseline_tail = 1.0 - out.test_baseline_popular;
    }
    return out;
}

double score_gap_user(std::uint32_t u, const FinalReps& reps,
                      const GroupAssignment& groups) {
    double sum_pop = 0.0, sum_tail = 0.0;
    std::size_t n_pop = 0, n_tail = 0;
    auto z = reps.user.row(u);
    for (std::uint32_t i = 0; i < reps.item.rows(); ++i) {
        const double s = dot(z, reps.item.row(i));
        if (groups.item_group[i] == Group::kPopular) {
            sum_pop += s;
            ++n_pop;
        } else {
            sum_tail += s;
            ++n_tail;
        }
    }
    if (n_pop == 0 || n_tail == 0)
        throw MetricUndefinedError("score_gap: an item group is empty");
    return sum_pop / static_cast<double>(n_pop) - sum_tail / static_cast<double>(n_tail);
}

double score_gap_mean(const FinalReps& reps, const GroupAssignment& groups) {
    double sum = 0.0;
    for (std::uint32_t u = 0; u < reps.user.rows(); ++u)
        sum += score_gap_user(u, reps, groups);
    return sum / static_cast<double>(reps.user.rows());
}

AngularDensity angular_density(const Mat& reps, double bandwidth) {
    if (reps.cols() != 2)
        throw ShapeError("angular_density requires 2-dimensional representations");
    if (bandwidth <= 0.0)
        throw ShapeError("angular_density: bandwidth must be positive");
    const std::size_t grid = 360;
    const double two_pi = 2.0 * std::acos(-1.0);
    const double pi = 0.5 * two_pi;
    std::vector<double> angles(reps.rows());
    for (std::size_t r = 0; r < reps.rows(); ++r)
        angles[r] = std::atan2(reps(r, 1), reps(r, 0));

    AngularDensity out;
    out.angle.resize(grid);
    out.density.assign(grid, 0.0);
    const double norm =
        1.0 / (static_cast<double>(reps.rows()) * bandwidth * std::sqrt(two_pi));
    for (std::size_t g = 0; g < grid; ++g) {
        const double theta = -pi + static_cast<double>(g) * two_pi / static_cast<double>(grid);
        out.angle[g] = theta;
        double d = 0.0;
        for (double a : angles) {
            for (int w = -3; w <= 3; ++w) {
                const double diff = theta - a + static_cast<double>(w) * two_pi;
                d += std::exp(-0.5 * diff * diff / (bandwidth * bandwidth));
            }
        }
        out.density[g] = d * norm;
    }
    return out;
}

std::string metric_report_to_json(const MetricReport& report) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["num_users"] = report.num_users;
    j["num_items"] = report.num_items;
    j["evaluated_users"] = report.evaluated_users;
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    for (const auto& [k, m] : report.per_k) {
        nlohmann::ordered_json entry;
        entry["hr"] = m.hr;
        entry["ndcg"] = m.ndcg;
        entry["hr_popular"] = m.hr_popular;
        entry["hr_tail"] = m.hr_tail;
        entry["ndcg_popular"] = m.ndcg_popular;
        entry["ndcg_tail"] = m.ndcg_tail;
        entry["dp"] = m.dp;
        entry["exposure_popular"] = m.exposure_popular;
        entry["exposure_tail"] = m.exposure_tail;
        metrics[std::to_string(k)] = entry;
    }
    j["metrics"] = metrics;
    j["pru"] = report.pru;
    j["pru_evaluated_users"] = report.pru_evaluated_users;
    j["pru_skipped_users"] = report.pru_skipped_users;
    j["loss_gap"] = report.loss_gap;
    j["score_gap"] = report.score_gap;
    j["exposure_test_baseline_popular"] = report.exposure_test_baseline_popular;
    j["exposure_test_baseline_tail"] = report.exposure_test_baseline_tail;
    nlohmann::ordered_json conv;
    conv["rank_one_is_best"] = true;
    conv["pru_average_set"] = "evaluable_users";
    conv["accuracy_measure"] = "ndcg";
    conv["hr_style"] = "recall";
    j["conventions"] = conv;
    return j.dump(2) + "\n";
}

} // namespace aurl
