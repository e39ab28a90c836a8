#pragma once

// Small dense LU with partial pivoting, templated on real/complex scalars.
// MNA systems of the circuits handled here stay well under a hundred
// unknowns, so dense storage beats sparse bookkeeping.

#include "rfsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace rfsim {

template <class T>
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, T{}) {}

    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }

    T& operator()(int r, int c) { return data_[std::size_t(r) * cols_ + c]; }
    const T& operator()(int r, int c) const { return data_[std::size_t(r) * cols_ + c]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    [[nodiscard]] std::vector<T> multiply(std::span<const T> x) const {
        std::vector<T> y(rows_, T{});
        for (int r = 0; r < rows_; ++r) {
            T acc{};
            for (int c = 0; c < cols_; ++c) acc += (*this)(r, c) * x[c];
            y[r] = acc;
        }
        return y;
    }

    static DenseMatrix identity(int n) {
        DenseMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

/// Square system A x = b as assembled by the MNA stampers.
template <class T>
struct MnaSystem {
    DenseMatrix<T> matrix;
    std::vector<T> rhs;

    explicit MnaSystem(int n = 0) : matrix(n, n), rhs(std::size_t(n), T{}) {}
    [[nodiscard]] int dimension() const { return matrix.rows(); }
};

/// In-place LU factorization (row pivoting). A pivot whose magnitude is
/// below `relative_tolerance` times the largest matrix entry is treated as
/// zero and reported with its column (unknown) index.
template <class T>
class LuFactorization {
public:
    explicit LuFactorization(DenseMatrix<T> a, double relative_tolerance = 1e-20)
        : lu_(std::move(a)), perm_(lu_.rows()) {
        const int n = lu_.rows();
        if (lu_.cols() != n) throw ArgumentError("LU requires a square matrix");
        double scale = 0.0;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) scale = std::max(scale, std::abs(lu_(r, c)));
        const double tiny = scale * relative_tolerance;
        for (int i = 0; i < n; ++i) perm_[i] = i;
        for (int k = 0; k < n; ++k) {
            int pivot = k;
            double best = std::abs(lu_(k, k));
            for (int r = k + 1; r < n; ++r) {
                const double m = std::abs(lu_(r, k));
                if (m > best) {
                    best = m;
                    pivot = r;
                }
            }
            if (!(best > tiny) || best == 0.0) throw SingularMatrixError(k);
            if (pivot != k) {
                for (int c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(pivot, c));
                std::swap(perm_[k], perm_[pivot]);
            }
            const T inv = T{1} / lu_(k, k);
            for (int r = k + 1; r < n; ++r) {
                T& f = lu_(r, k);
                if (f == T{}) continue;
                f *= inv;
                for (int c = k + 1; c < n; ++c) lu_(r, c) -= f * lu_(k, c);
            }
        }
    }

    [[nodiscard]] std::vector<T> solve(std::span<const T> b) const {
        const int n = lu_.rows();
        if (static_cast<int>(b.size()) != n) throw ArgumentError("rhs dimension mismatch");
        std::vector<T> x(n);
        for (int i = 0; i < n; ++i) x[i] = b[perm_[i]];
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < i; ++c) x[i] -= lu_(i, c) * x[c];
        for (int i = n - 1; i >= 0; --i) {
            for (int c = i + 1; c < n; ++c) x[i] -= lu_(i, c) * x[c];
            x[i] /= lu_(i, i);
        }
        return x;
    }

    [[nodiscard]] int dimension() const { return lu_.rows(); }

private:
    DenseMatrix<T> lu_;
    std::vector<int> perm_;
};

/// Factor and solve an assembled system in one go.
template <class T>
std::vector<T> solve_system(const MnaSystem<T>& system) {
    return LuFactorization<T>(system.matrix).solve(system.rhs);
}

template <class T>
double max_abs(std::span<const T> v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, static_cast<double>(std::abs(x)));
    return m;
}

} // namespace rfsim
