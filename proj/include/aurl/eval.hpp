#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "aurl/backbone.hpp"
#include "aurl/dataset.hpp"
#include "aurl/matrix.hpp"

namespace aurl {

// Full descending-score ordering of the user's candidate items (all items
// minus the user's training items); ties broken by ascending item index.
struct RankedList {
    std::uint32_t user = 0;
    std::vector<std::uint32_t> items;
};

RankedList rank_items(std::uint32_t u, const std::vector<double>& scores,
                      const std::vector<std::uint32_t>& train_items);

// hits in the top K / |test_items|  (recall-style hit ratio); test_items must
// be sorted ascending, the invariant InteractionSet::user_items maintains
double hr_at_k(const RankedList& list, const std::vector<std::uint32_t>& test_items,
               std::size_t k);

// DCG over hit positions p <= K with gain 1/log2(p+1); IDCG over the first
// min(K, |test|) positions. test_items must be sorted ascending.
double ndcg_at_k(const RankedList& list, const std::vector<std::uint32_t>& test_items,
                 std::size_t k);

// Pearson correlation of average ranks (ties get the mean of their span).
// Throws MetricUndefinedError when either side has zero variance.
double spearman(std::span<const double> xs, std::span<const double> ys);

// 20 uniform bins on [0,1], last bin right-closed, normalized to sum 1.
std::vector<double> accuracy_histogram(const std::vector<double>& values,
                                       std::size_t bins = 20);

// Jensen-Shannon divergence, log base 2, in [0,1].
double jsd(std::span<const double> p, std::span<const double> q);

struct EvalOptions {
    std::vector<std::size_t> ks = {20};
    std::size_t histogram_bins = 20;
    std::uint64_t seed = 0; // drives the fresh negatives of the loss gap
};

struct PerKMetrics {
    double hr = 0.0;
    double ndcg = 0.0;
    double hr_popular = 0.0;
    double hr_tail = 0.0;
    double ndcg_popular = 0.0;
    double ndcg_tail = 0.0;
    double dp = 0.0;
    double exposure_popular = 0.0;
    double exposure_tail = 0.0;
};

struct MetricReport {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::size_t evaluated_users = 0; // users with at least one test item
    std::map<std::size_t, PerKMetrics> per_k;
    double pru = 0.0;
    std::size_t pru_evaluated_users = 0;
    std::size_t pru_skipped_users = 0;
    double loss_gap = 0.0;
    double score_gap = 0.0;
    double exposure_test_baseline_popular = 0.0;
    double exposure_test_baseline_tail = 0.0;
};

// Ranks every test user once and fills the whole report.
MetricReport evaluate_model(const FinalReps& reps, const InteractionSet& train,
                            const InteractionSet& test, const GroupAssignment& groups,
                            const PopularityTable& pop, const EvalOptions& opts);

// NDCG@k averaged over users with holdout items; used for early stopping.
double mean_ndcg(const FinalReps& reps, const InteractionSet& train,
                 const InteractionSet& holdout, std::size_t k);

// Mean per-triple BPR loss per user group over training interactions with one
// fresh seeded negative each; returns popular-mean - tail-mean.
double loss_gap(const FinalReps& reps, const InteractionSet& train,
                const GroupAssignment& groups, std::uint64_t seed);

// Share of top-K slots occupied by each item group across all users, next to
// the test-set interaction shares as the comparison baseline.
struct ExposureReport {
    double popular = 0.0;
    double tail = 0.0;
    double test_baseline_popular = 0.0;
    double test_baseline_tail = 0.0;
};

ExposureReport group_exposure(const FinalReps& reps, const InteractionSet& train,
                              const InteractionSet& test, const GroupAssignment& groups,
                              std::size_t k);

// E_{i in pop}[s(u,i)] - E_{i in tail}[s(u,i)] for one user.
double score_gap_user(std::uint32_t u, const FinalReps& reps,
                      const GroupAssignment& groups);

// The same statistic averaged over all users.
double score_gap_mean(const FinalReps& reps, const GroupAssignment& groups);

// Wrapped-Gaussian kernel density of row angles at 360 uniform grid points on
// [-pi, pi). Rows must be 2-dimensional.
struct AngularDensity {
    std::vector<double> angle;   // grid point
    std::vector<double> density; // estimated density
};

AngularDensity angular_density(const Mat& reps, double bandwidth);

std::string metric_report_to_json(const MetricReport& report);

} // namespace aurl
