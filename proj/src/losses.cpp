#include "aurl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "aurl/errors.hpp"

namespace aurl {

BandwidthRule parse_bandwidth_rule(const std::string& name) {
    if (name == "median")
        return BandwidthRule::kMedian;
    if (name == "fixed")
        return BandwidthRule::kFixed;
    throw ParseError("unknown bandwidth rule '" + name + "' (expected median or fixed)");
}

std::string bandwidth_rule_name(BandwidthRule rule) {
    return rule == BandwidthRule::kMedian ? "median" : "fixed";
}

LossBreakdown total_loss(double rec, double align, double uniform, double l2,
                         double lambda1, double lambda2, double lambda) {
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda < 0.0)
        throw ShapeError("loss weights must be nonnegative");
    LossBreakdown b;
    b.rec = rec;
    b.align = align;
    b.uniform = uniform;
    b.l2 = l2;
    b.lambda1 = lambda1;
    b.lambda2 = lambda2;
    b.lambda = lambda;
    b.total = rec + lambda1 * align + lambda2 * uniform + lambda * l2;
    return b;
}

double bpr_term(double s_pos, double s_neg) {
    const double delta = s_pos - s_neg;
    // softplus(-delta) without overflow on either tail
    if (delta >= 0.0)
        return std::log1p(std::exp(-delta));
    return -delta + std::log1p(std::exp(delta));
}

double bpr_grad_coeff(double delta) {
    // sigma(-delta), evaluated on the side that keeps exp() bounded
    if (delta >= 0.0) {
        const double e = std::exp(-delta);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(delta));
}

BprGrad bpr_gradients(std::span<const double> z_u, std::span<const double> h_i,
                      std::span<const double> h_neg) {
    if (z_u.size() != h_i.size() || z_u.size() != h_neg.size())
        throw ShapeError("bpr_gradients: dimension mismatch");
    const double c = bpr_grad_coeff(dot(z_u, h_i) - dot(z_u, h_neg));
    BprGrad g;
    g.z_u.resize(z_u.size());
    g.h_i.resize(z_u.size());
    g.h_neg.resize(z_u.size());
    for (std::size_t k = 0; k < z_u.size(); ++k) {
        g.z_u[k] = -c * (h_i[k] - h_neg[k]);
        g.h_i[k] = -c * z_u[k];
        g.h_neg[k] = c * z_u[k];
    }
    return g;
}

double median_heuristic_gamma(const Mat& points) {
    const std::size_t n = points.rows();
    if (n < 2)
        throw InsufficientPairsError("median heuristic needs at least 2 points");
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            dists.push_back(sq_dist(points.row(a), points.row(b)));
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid),
                     dists.end());
    double median = dists[mid];
    if (dists.size() % 2 == 0) {
        const double lower =
            *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    if (median <= 0.0)
        throw DegenerateBandwidthError("pairwise distances collapse; median is zero");
    return 1.0 / median;
}

double resolve_gamma(const Mat& pooled, const KernelConfig& cfg) {
    if (cfg.bandwidth_rule == BandwidthRule::kFixed)
        return cfg.gamma;
    try {
        return median_heuristic_gamma(pooled);
    } catch (const DegenerateBandwidthError&) {
        return 1.0;
    }
}

namespace {

// Pairwise kernel sums. Norms are precomputed so each pair costs one dot.
std::vector<double> row_sq_norms(const Mat& m) {
    std::vector<double> norms(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        norms[r] = sq_norm(m.row(r));
    return norms;
}

// Sum over unordered distinct pairs of exp(-gamma |a-b|^2) within one matrix.
double kernel_self_sum(const Mat& x, const std::vector<double>& norms, double gamma) {
    double s = 0.0;
    for (std::size_t a = 0; a < x.rows(); ++a) {
        auto ra = x.row(a);
        for (std::size_t b = a + 1; b < x.rows(); ++b) {
            const double d2 = norms[a] + norms[b] - 2.0 * dot(ra, x.row(b));
            s += std::exp(-gamma * std::max(d2, 0.0));
        }
    }
    return s;
}

} // namespace

double mmd_sq(const Mat& x, const Mat& y, double gamma) {
    return mmd_sq_with_grad(x, y, gamma, nullptr, nullptr);
}

double mmd_sq_with_grad(const Mat& x, const Mat& y, double gamma,
                        Mat* grad_x, Mat* grad_y) {
    const std::size_t n = x.rows();
    const std::size_t m = y.rows();
    if (n == 0 || m == 0)
        throw InsufficientPairsError("mmd_sq requires nonempty samples");
    if (x.cols() != y.cols())
        throw ShapeError("mmd_sq: dimension mismatch");
    if (gamma <= 0.0)
        throw ShapeError("mmd_sq: gamma must be positive");

    const auto nx = row_sq_norms(x);
    const auto ny = row_sq_norms(y);

    // xx and yy blocks: diagonal entries are k(v,v) = 1
    const double sum_xx = static_cast<double>(n) + 2.0 * kernel_self_sum(x, nx, gamma);
    const double sum_yy = static_cast<double>(m) + 2.0 * kernel_self_sum(y, ny, gamma);

    double sum_xy = 0.0;
    Mat kxy; // cross kernel, kept only when a gradient is requested
    const bool want_grad = grad_x != nullptr || grad_y != nullptr;
    if (want_grad)
        kxy = Mat(n, m);
    for (std::size_t a = 0; a < n; ++a) {
        auto ra = x.row(a);
        for (std::size_t b = 0; b < m; ++b) {
            const double d2 = nx[a] + ny[b] - 2.0 * dot(ra, y.row(b));
            const double k = std::exp(-gamma * std::max(d2, 0.0));
            sum_xy += k;
            if (want_grad)
                kxy(a, b) = k;
        }
    }

    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    const double value = sum_xx / (dn * dn) + sum_yy / (dm * dm) - 2.0 * sum_xy / (dn * dm);

    // d/dy_b = -(4g/m^2) sum_d k_yy(b,d)(y_b - y_d) + (4g/nm) sum_a k_xy(a,b)(y_b - x_a)
    auto self_grad = [gamma](const Mat& v, const std::vector<double>& norms,
                             double scale, Mat& out) {
        const std::size_t r = v.rows();
        for (std::size_t a = 0; a < r; ++a) {
            auto ra = v.row(a);
            auto ga = out.row(a);
            double wsum = 0.0;
            for (std::size_t b = 0; b < r; ++b) {
                if (b == a)
                    continue;
                const double d2 = norms[a] + norms[b] - 2.0 * dot(ra, v.row(b));
                const double k = std::exp(-gamma * std::max(d2, 0.0));
                wsum += k;
                axpy(scale * k, v.row(b), ga);
            }
            axpy(-scale * wsum, ra, ga);
        }
    };

    if (grad_y != nullptr) {
        *grad_y = Mat(m, y.cols());
        // within-Y part: -(4g/m^2) (W_b y_b - sum k y_d)  =>  scale applied inside
        self_grad(y, ny, 4.0 * gamma / (dm * dm), *grad_y);
        // cross part
        const double cs = 4.0 * gamma / (dn * dm);
        for (std::size_t b = 0; b < m; ++b) {
            auto gb = grad_y->row(b);
            double wsum = 0.0;
            for (std::size_t a = 0; a < n; ++a) {
                const double k = kxy(a, b);
                wsum += k;
                axpy(-cs * k, x.row(a), gb);
            }
            axpy(cs * wsum, y.row(b), gb);
        }
    }
    if (grad_x != nullptr) {
        *grad_x = Mat(n, x.cols());
        self_grad(x, nx, 4.0 * gamma / (dn * dn), *grad_x);
        const double cs = 4.0 * gamma / (dn * dm);
        for (std::size_t a = 0; a < n; ++a) {
            auto ga = grad_x->row(a);
            double wsum = 0.0;
            for (std::size_t b = 0; b < m; ++b) {
                const double k = kxy(a, b);
                wsum += k;
                axpy(-cs * k, y.row(b), ga);
            }
            axpy(cs * wsum, x.row(a), ga);
        }
    }
    return value;
}

AlignmentResult alignment_loss(const Mat& user_pop, const Mat& user_tail,
                               const Mat& item_pop, const Mat& item_tail,
                               const KernelConfig& cfg,
                               const double* gamma_user_override,
                               const double* gamma_item_override, bool want_grad) {
    if (user_pop.rows() == 0 || user_tail.rows() == 0 || item_pop.rows() == 0 ||
        item_tail.rows() == 0)
        throw SamplingError("alignment_loss: a sampled group subset is empty");

    auto pooled = [](const Mat& a, const Mat& b) {
        Mat out(a.rows() + b.rows(), a.cols());
        std::copy(a.storage().begin(), a.storage().end(), out.storage().begin());
        std::copy(b.storage().begin(), b.storage().end(),
                  out.storage().begin() + static_cast<std::ptrdiff_t>(a.storage().size()));
        return out;
    };

    AlignmentResult res;
    res.gamma_user = gamma_user_override != nullptr
                         ? *gamma_user_override
                         : resolve_gamma(pooled(user_pop, user_tail), cfg);
    res.gamma_item = gamma_item_override != nullptr
                         ? *gamma_item_override
                         : resolve_gamma(pooled(item_pop, item_tail), cfg);
    res.mmd_user = mmd_sq_with_grad(user_pop, user_tail, res.gamma_user, nullptr,
                                    want_grad ? &res.grad_user_tail : nullptr);
    res.mmd_item = mmd_sq_with_grad(item_pop, item_tail, res.gamma_item, nullptr,
                                    want_grad ? &res.grad_item_tail : nullptr);
    res.value = 0.5 * (res.mmd_user + res.mmd_item);
    if (want_grad) {
        // the align loss carries the 1/2 of Eq. 13
        for (double& v : res.grad_user_tail.storage())
            v *= 0.5;
        for (double& v : res.grad_item_tail.storage())
            v *= 0.5;
    }
    return res;
}

double uniformity_side(const Mat& v, double t) {
    const std::size_t n = v.rows();
    if (n < 2)
        throw InsufficientPairsError("uniformity needs at least 2 points per side");
    if (t <= 0.0)
        throw ShapeError("uniformity: t must be positive");
    const auto norms = row_sq_norms(v);
    double s = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        auto ra = v.row(a);
        for (std::size_t b = a + 1; b < n; ++b) {
            const double d2 = norms[a] + norms[b] - 2.0 * dot(ra, v.row(b));
            s += std::exp(-t * std::max(d2, 0.0));
        }
    }
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return std::log(s / pairs);
}

double uniformity_side_with_grad(const Mat& v, double t, Mat& grad) {
    const std::size_t n = v.rows();
    if (n < 2)
        throw InsufficientPairsError("uniformity needs at least 2 points per side");
    if (t <= 0.0)
        throw ShapeError("uniformity: t must be positive");
    const auto norms = row_sq_norms(v);

    // kernel matrix with zero diagonal; S is the sum over unordered pairs
    Mat k(n, n);
    double s = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        auto ra = v.row(a);
        for (std::size_t b = a + 1; b < n; ++b) {
            const double d2 = norms[a] + norms[b] - 2.0 * dot(ra, v.row(b));
            const double w = std::exp(-t * std::max(d2, 0.0));
            k(a, b) = w;
            k(b, a) = w;
            s += w;
        }
    }
    grad = Mat(n, v.cols());
    const double scale = -2.0 * t / s;
    for (std::size_t a = 0; a < n; ++a) {
        auto ga = grad.row(a);
        double wsum = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const double w = k(a, b);
            if (w == 0.0)
                continue;
            wsum += w;
            axpy(-scale * w, v.row(b), ga);
        }
        axpy(scale * wsum, v.row(a), ga);
    }
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return std::log(s / pairs);
}

double uniformity_loss(const Mat& user_reps, const Mat& item_reps, double t) {
    return 0.5 * (uniformity_side(user_reps, t) + uniformity_side(item_reps, t));
}

double l2_term(const Mat& emb, std::span<const std::uint32_t> rows) {
    double s = 0.0;
    for (auto r : rows)
        s += sq_norm(emb.row(r));
    return s;
}

double finite_difference_check(
    const std::function<double()>& loss_fn,
    const std::vector<std::pair<Mat*, const Mat*>>& params, double epsilon) {
    double max_rel = 0.0;
    for (const auto& [param, grad] : params) {
        if (param->rows() != grad->rows() || param->cols() != grad->cols())
            throw ShapeError("finite_difference_check: gradient shape mismatch");
        auto& data = param->storage();
        for (std::size_t k = 0; k < data.size(); ++k) {
            const double saved = data[k];
            data[k] = saved + epsilon;
            const double fp = loss_fn();
            data[k] = saved - epsilon;
            const double fm = loss_fn();
            data[k] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw TrainingAbort("finite_difference_check: non-finite loss");
            const double fd = (fp - fm) / (2.0 * epsilon);
            const double g = grad->storage()[k];
            const double rel =
                std::abs(g - fd) / std::max({1.0, std::abs(g), std::abs(fd)});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace aurl
