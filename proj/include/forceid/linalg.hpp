#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forceid/errors.hpp"
#include "forceid/tolerances.hpp"

namespace forceid {

using Vector = std::vector<double>;

/// Dense row-major matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    Vector column(std::size_t c) const {
        Vector out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
        return out;
    }

    std::span<const double> data() const noexcept { return data_; }

    DenseMatrix transposed() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) {
    // scaled accumulation; avoids overflow for large entries
    double scale = 0.0;
    double ssq = 1.0;
    for (double v : a) {
        if (v == 0.0) continue;
        const double av = std::abs(v);
        if (scale < av) {
            ssq = 1.0 + ssq * (scale / av) * (scale / av);
            scale = av;
        } else {
            ssq += (av / scale) * (av / scale);
        }
    }
    return scale * std::sqrt(ssq);
}

inline double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("subtract: length mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline Vector multiply(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw DimensionError("multiply: matrix/vector shape mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
    return y;
}

/// A^T x
inline Vector multiply_transposed(const DenseMatrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) throw DimensionError("multiply_transposed: shape mismatch");
    Vector y(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        for (std::size_t c = 0; c < a.cols(); ++c) y[c] += row[c] * x[r];
    }
    return y;
}

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("multiply: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

/// A^T A
inline DenseMatrix gram(const DenseMatrix& a) {
    DenseMatrix g(a.cols(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            if (row[i] == 0.0) continue;
            for (std::size_t j = i; j < a.cols(); ++j) g(i, j) += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < a.cols(); ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

/// Solves A x = rhs by Gaussian elimination with partial pivoting.
inline Vector solve_ge(DenseMatrix a, Vector rhs) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionError("solve_ge: matrix is not square");
    if (rhs.size() != n) throw DimensionError("solve_ge: rhs length does not match matrix");

    double scale = 0.0;
    for (double v : a.data()) scale = std::max(scale, std::abs(v));
    if (scale == 0.0 && n > 0) throw SingularMatrixError("solve_ge: zero matrix");

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
        if (std::abs(a(p, k)) <= tolerances::pivot * scale)
            throw SingularMatrixError("solve_ge: zero pivot in column " + std::to_string(k) +
                                      " after pivoting");
        if (p != k) {
            std::swap_ranges(a.row(k).begin(), a.row(k).end(), a.row(p).begin());
            std::swap(rhs[k], rhs[p]);
        }
        const double pivot = a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = a(i, k) / pivot;
            if (m == 0.0) continue;
            a(i, k) = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
            rhs[i] -= m * rhs[k];
        }
    }
    Vector x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = rhs[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= a(k, j) * x[j];
        x[k] = s / a(k, k);
    }
    return x;
}

/// Solves A x = rhs for symmetric positive-definite A by Cholesky factorization.
/// Only the lower triangle of A is read.
inline Vector solve_spd(const DenseMatrix& a, Vector rhs) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionError("solve_spd: matrix is not square");
    if (rhs.size() != n) throw DimensionError("solve_spd: rhs length does not match matrix");

    double diag_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_max = std::max(diag_max, std::abs(a(i, i)));

    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        // a pivot lost to rounding relative to the diagonal means the matrix is numerically singular
        if (!(d > std::numeric_limits<double>::epsilon() * diag_max * static_cast<double>(n)))
            throw NotPositiveDefiniteError("solve_spd: non-positive pivot at row " +
                                           std::to_string(j));
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * rhs[k];
        rhs[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * rhs[k];
        rhs[i] = s / l(i, i);
    }
    return rhs;
}

struct SvdResult {
    Vector values;              ///< descending
    DenseMatrix right_vectors;  ///< columns are the right singular vectors (cols x cols)
    int sweeps = 0;
};

/// Singular values by one-sided (Hestenes) Jacobi rotations.
///
/// Wide matrices are padded with zero rows so that the right vectors always span R^cols.
inline SvdResult svd(const DenseMatrix& a) {
    const std::size_t n = a.cols();
    const std::size_t m = std::max(a.rows(), n);
    if (n == 0) return {};

    // column-major working copy: u[j] is column j
    std::vector<Vector> u(n, Vector(m, 0.0));
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < n; ++c) u[c][r] = a(r, c);
    std::vector<Vector> v(n, Vector(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

    // columns this small are round-off of a rank-deficient matrix
    double frob2 = 0.0;
    for (const auto& col : u) frob2 += dot(col, col);
    const double eps = std::numeric_limits<double>::epsilon() * static_cast<double>(m);
    const double negligible = eps * eps * frob2;

    int sweep = 0;
    bool rotated = true;
    while (rotated) {
        if (sweep == tolerances::jacobi_max_sweeps)
            throw ConvergenceError("svd: no convergence after " + std::to_string(sweep) +
                                   " Jacobi sweeps");
        ++sweep;
        rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = dot(u[p], u[p]);
                const double beta = dot(u[q], u[q]);
                const double gamma = dot(u[p], u[q]);
                if (alpha <= negligible || beta <= negligible) continue;
                if (std::abs(gamma) <= tolerances::jacobi_offdiag * std::sqrt(alpha * beta))
                    continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double up = u[p][i];
                    const double uq = u[q][i];
                    u[p][i] = cs * up - sn * uq;
                    u[q][i] = sn * up + cs * uq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v[p][i];
                    const double vq = v[q][i];
                    v[p][i] = cs * vp - sn * vq;
                    v[q][i] = sn * vp + cs * vq;
                }
            }
        }
    }

    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t j = 0; j < n; ++j) order[j] = {norm2(u[j]), j};
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });

    SvdResult out;
    out.sweeps = sweep;
    out.values.resize(n);
    out.right_vectors = DenseMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = order[k].first;
        for (std::size_t i = 0; i < n; ++i) out.right_vectors(i, k) = v[order[k].second][i];
    }
    // a wide matrix has at most rows() nonzero singular values
    out.values.resize(std::min(a.rows(), n));
    return out;
}

}  // namespace forceid
