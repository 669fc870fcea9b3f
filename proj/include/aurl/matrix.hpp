#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "aurl/errors.hpp"

namespace aurl {

// Dense row-major matrix of doubles. Training state, representations and
// gradients all use this; it is deliberately minimal.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v))
                return false;
        return true;
    }

    friend bool operator==(const Mat& a, const Mat& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double sq_norm(std::span<const double> a) { return dot(a, a); }

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += alpha * x[i];
}

// Extracts the listed rows of m into a new matrix, in the given order.
template <typename IndexContainer>
Mat gather_rows(const Mat& m, const IndexContainer& rows) {
    Mat out(rows.size(), m.cols());
    std::size_t r = 0;
    for (auto idx : rows) {
        auto src = m.row(static_cast<std::size_t>(idx));
        std::copy(src.begin(), src.end(), out.row(r).begin());
        ++r;
    }
    return out;
}

} // namespace aurl
