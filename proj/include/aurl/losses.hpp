#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aurl/matrix.hpp"

namespace aurl {

enum class BandwidthRule { kMedian, kFixed };

BandwidthRule parse_bandwidth_rule(const std::string& name);
std::string bandwidth_rule_name(BandwidthRule rule);

struct KernelConfig {
    BandwidthRule bandwidth_rule = BandwidthRule::kMedian;
    double gamma = 1.0; // fixed-rule bandwidth; also the degenerate-median fallback
    double t = 2.0;     // uniformity temperature
};

struct LossBreakdown {
    double rec = 0.0;
    double align = 0.0;
    double uniform = 0.0;
    double l2 = 0.0;
    double total = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda = 0.0;
};

LossBreakdown total_loss(double rec, double align, double uniform, double l2,
                         double lambda1, double lambda2, double lambda);

// -ln sigma(s_pos - s_neg), softplus form, no overflow for any argument.
double bpr_term(double s_pos, double s_neg);

// c = 1 - sigma(delta) = sigma(-delta), the shared coefficient of Eqs. 6-8.
double bpr_grad_coeff(double delta);

struct BprGrad {
    std::vector<double> z_u;
    std::vector<double> h_i;
    std::vector<double> h_neg;
};

// grad z_u = -c (h_i - h_neg); grad h_i = -c z_u; grad h_neg = +c z_u.
BprGrad bpr_gradients(std::span<const double> z_u, std::span<const double> h_i,
                      std::span<const double> h_neg);

// gamma = 1 / median of pairwise squared distances over distinct unordered
// pairs (even count: mean of the middle two). Throws InsufficientPairsError
// for < 2 points and DegenerateBandwidthError when the median vanishes.
double median_heuristic_gamma(const Mat& points);

// Resolves the kernel bandwidth for one pooled sample under the configured
// rule; the degenerate median falls back to gamma = 1.
double resolve_gamma(const Mat& pooled, const KernelConfig& cfg);

// Squared MMD with Gaussian kernel k(a,b) = exp(-gamma |a-b|^2), full
// V-statistic form including diagonal terms, so the value is >= 0.
double mmd_sq(const Mat& x, const Mat& y, double gamma);

// Same value; additionally writes d(mmd_sq)/dx and/or d(mmd_sq)/dy into the
// provided matrices (overwritten, caller-allocated or empty). Null skips.
double mmd_sq_with_grad(const Mat& x, const Mat& y, double gamma,
                        Mat* grad_x, Mat* grad_y);

struct AlignmentResult {
    double value = 0.0; // (mmd_user + mmd_item) / 2
    double mmd_user = 0.0;
    double mmd_item = 0.0;
    double gamma_user = 1.0;
    double gamma_item = 1.0;
    Mat grad_user_tail; // w.r.t. the normalized tail rows; popular rows are constants
    Mat grad_item_tail;
};

// Inputs are row-normalized sampled representations. Bandwidths follow cfg on
// the pooled popular+tail sample per side unless an override is supplied
// (used to freeze gamma within one optimization step).
AlignmentResult alignment_loss(const Mat& user_pop, const Mat& user_tail,
                               const Mat& item_pop, const Mat& item_tail,
                               const KernelConfig& cfg,
                               const double* gamma_user_override,
                               const double* gamma_item_override, bool want_grad);

// log of the mean pairwise Gaussian potential exp(-t |v_a - v_b|^2) over
// distinct unordered pairs; in [-4t, 0] for unit rows.
double uniformity_side(const Mat& v, double t);
double uniformity_side_with_grad(const Mat& v, double t, Mat& grad);

// (user side + item side) / 2
double uniformity_loss(const Mat& user_reps, const Mat& item_reps, double t);

// Sum of squared row norms over the touched rows (mini-batch convention);
// the gradient contribution is 2 * row, applied by the caller.
double l2_term(const Mat& emb, std::span<const std::uint32_t> rows);

// Central finite differences of loss_fn against analytic gradients. Each pair
// is (parameter matrix perturbed in place, its analytic gradient). Returns
// max_i |g_i - fd_i| / max(1, |g_i|, |fd_i|).
double finite_difference_check(
    const std::function<double()>& loss_fn,
    const std::vector<std::pair<Mat*, const Mat*>>& params, double epsilon);

} // namespace aurl
