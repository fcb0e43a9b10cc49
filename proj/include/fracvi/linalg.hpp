#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracvi/grid.hpp"

namespace fracvi {

class SingularMatrixError : public std::runtime_error {
public:
    explicit SingularMatrixError(int pivot)
        : std::runtime_error("singular matrix: zero pivot at column " + std::to_string(pivot)), pivot_(pivot) {}
    int pivot() const noexcept { return pivot_; }

private:
    int pivot_;
};

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
        if (rows < 0 || cols < 0) throw DomainError("negative matrix size");
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }

    double& operator()(int i, int j) noexcept { return a_[idx(i, j)]; }
    double operator()(int i, int j) const noexcept { return a_[idx(i, j)]; }

    std::vector<double> multiply(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != cols_) throw DomainError("matrix-vector size mismatch");
        std::vector<double> y(static_cast<std::size_t>(rows_), 0.0);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) y[static_cast<std::size_t>(i)] += (*this)(i, j) * x[static_cast<std::size_t>(j)];
        return y;
    }

private:
    std::size_t idx(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

/// PA = LU with partial (row) pivoting; L has a unit diagonal and is stored below U.
class LUDecomposition {
public:
    explicit LUDecomposition(Matrix a) : lu_(std::move(a)), perm_(static_cast<std::size_t>(lu_.rows())) {
        const int n = lu_.rows();
        if (lu_.cols() != n) throw DomainError("LU needs a square matrix");
        std::iota(perm_.begin(), perm_.end(), 0);

        double amax = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) amax = std::max(amax, std::abs(lu_(i, j)));
        const double tiny = n * std::numeric_limits<double>::epsilon() * amax;

        for (int k = 0; k < n; ++k) {
            int p = k;
            for (int i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
            if (!(std::abs(lu_(p, k)) > tiny)) throw SingularMatrixError(k);
            if (p != k) {
                for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
                std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(p)]);
            }
            const double pivot = lu_(k, k);
            for (int i = k + 1; i < n; ++i) {
                const double m = lu_(i, k) / pivot;
                lu_(i, k) = m;
                if (m == 0.0) continue;
                for (int j = k + 1; j < n; ++j) lu_(i, j) -= m * lu_(k, j);
            }
        }
    }

    int size() const noexcept { return lu_.rows(); }

    std::vector<double> solve(std::span<const double> b) const {
        const int n = size();
        if (static_cast<int>(b.size()) != n) throw DomainError("right-hand side size mismatch");
        std::vector<double> x(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            double s = b[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])];
            for (int j = 0; j < i; ++j) s -= lu_(i, j) * x[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(i)] = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = x[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < n; ++j) s -= lu_(i, j) * x[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(i)] = s / lu_(i, i);
        }
        return x;
    }

private:
    Matrix lu_;
    std::vector<int> perm_;
};

inline std::vector<double> lu_solve(Matrix a, std::span<const double> b) {
    return LUDecomposition(std::move(a)).solve(b);
}

}  // namespace fracvi
