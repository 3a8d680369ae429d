#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "csae/errors.hpp"

namespace csae {

// Dense row-major matrix. Parameters and datasets are stored in 32-bit floats;
// reductions accumulate in 64-bit (see matvec, pearson).
template <typename T>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;  // row-major, rows * cols entries

    Mat() = default;
    Mat(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        return std::all_of(data.begin(), data.end(),
                           [](T v) { return std::isfinite(static_cast<double>(v)); });
    }

    bool operator==(const Mat&) const = default;
};

using MatF = Mat<float>;
using MatD = Mat<double>;
using VecF = std::vector<float>;
using VecD = std::vector<double>;

// y[i] = sum_j W[i,j] * x[j], accumulated in double.
template <typename TW, typename TX>
VecD matvec_wide(const Mat<TW>& w, std::span<const TX> x) {
    if (w.cols != x.size()) {
        throw ValidationError("matvec: W has " + std::to_string(w.cols) + " cols but x has " +
                              std::to_string(x.size()) + " entries");
    }
    VecD y(w.rows, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const TW* wi = w.data.data() + i * w.cols;
        double acc = 0.0;
        for (std::size_t j = 0; j < w.cols; ++j) {
            acc += static_cast<double>(wi[j]) * static_cast<double>(x[j]);
        }
        y[i] = acc;
    }
    return y;
}

inline VecF matvec(const MatF& w, std::span<const float> x) {
    VecD wide = matvec_wide(w, x);
    return VecF(wide.begin(), wide.end());
}

// Indices of the k largest entries of v, returned in ascending index order.
// Ties break toward the lower index.
template <typename T>
std::vector<std::size_t> topk_mask(std::span<const T> v, std::size_t k) {
    if (k < 1 || k > v.size()) {
        throw ValidationError("topk_mask: k=" + std::to_string(k) + " out of range for length " +
                              std::to_string(v.size()));
    }
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) return v[a] > v[b];
        return a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(),
                     better);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// Sample Pearson correlation. A zero-variance input yields 0 rather than NaN:
// a constant activation pattern carries no correlational signal.
template <typename TA, typename TB>
double pearson(std::span<const TA> a, std::span<const TB> b) {
    if (a.size() != b.size()) {
        throw ValidationError("pearson: length mismatch " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
    }
    if (a.size() < 2) {
        throw ValidationError("pearson: need at least 2 samples");
    }
    const double n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += static_cast<double>(a[i]);
        mb += static_cast<double>(b[i]);
    }
    ma /= n;
    mb /= n;
    double saa = 0.0;
    double sbb = 0.0;
    double sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = static_cast<double>(a[i]) - ma;
        const double db = static_cast<double>(b[i]) - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(sigmoid(x)) = -softplus(-x), computed without overflow for any finite x.
inline double log_sigmoid(double x) {
    return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
}

// Solves A X = B for symmetric positive definite A (in place Cholesky).
// A is (m x m), B is (m x c); returns X as (m x c).
inline MatD cholesky_solve(MatD a, const MatD& b) {
    if (a.rows != a.cols || a.rows != b.rows) {
        throw ValidationError("cholesky_solve: shape mismatch");
    }
    const std::size_t m = a.rows;
    for (std::size_t j = 0; j < m; ++j) {
        double diag = a(j, j);
        for (std::size_t p = 0; p < j; ++p) diag -= a(j, p) * a(j, p);
        if (diag <= 0.0) {
            throw ValidationError("cholesky_solve: matrix not positive definite");
        }
        a(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < m; ++i) {
            double s = a(i, j);
            for (std::size_t p = 0; p < j; ++p) s -= a(i, p) * a(j, p);
            a(i, j) = s / a(j, j);
        }
    }
    MatD x = b;
    // forward substitution L y = B
    for (std::size_t c = 0; c < x.cols; ++c) {
        for (std::size_t i = 0; i < m; ++i) {
            double s = x(i, c);
            for (std::size_t p = 0; p < i; ++p) s -= a(i, p) * x(p, c);
            x(i, c) = s / a(i, i);
        }
        // back substitution L^T x = y
        for (std::size_t i = m; i-- > 0;) {
            double s = x(i, c);
            for (std::size_t p = i + 1; p < m; ++p) s -= a(p, i) * x(p, c);
            x(i, c) = s / a(i, i);
        }
    }
    return x;
}

}  // namespace csae
