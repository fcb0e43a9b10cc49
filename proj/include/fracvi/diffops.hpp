#pragma once

/**
 * @file diffops.hpp
 * @brief One-sided finite differences, the rectangle-rule quadrature on
 *        I_sigma, and the discrete integration-by-parts identity.
 *
 * Sign convention: the plus operator is (Q_k - Q_{k+1})/h, so the discrete
 * derivative on side s is -sign(s) * delta(Q, s).
 */

#include <cstddef>
#include <utility>

#include "fracvi/grid.hpp"
#include "fracvi/summation.hpp"

namespace fracvi {

/// (Q_k - Q_{k+1}) / h for k = 0..N-1.
inline ShiftedSequence delta_plus(const Trajectory& q) {
    const int n = q.grid().intervals();
    const int d = q.dim();
    const double h = q.grid().step();
    Vec out(static_cast<std::size_t>(n) * d);
    for (int k = 0; k < n; ++k) {
        auto cur = q[k];
        auto next = q[k + 1];
        for (int c = 0; c < d; ++c) out[static_cast<std::size_t>(k) * d + c] = (cur[c] - next[c]) / h;
    }
    return ShiftedSequence(q.grid(), d, Side::plus, std::move(out));
}

/// (Q_k - Q_{k-1}) / h for k = 1..N.
inline ShiftedSequence delta_minus(const Trajectory& q) {
    const int n = q.grid().intervals();
    const int d = q.dim();
    const double h = q.grid().step();
    Vec out(static_cast<std::size_t>(n) * d);
    for (int k = 1; k <= n; ++k) {
        auto cur = q[k];
        auto prev = q[k - 1];
        for (int c = 0; c < d; ++c) out[static_cast<std::size_t>(k - 1) * d + c] = (cur[c] - prev[c]) / h;
    }
    return ShiftedSequence(q.grid(), d, Side::minus, std::move(out));
}

inline ShiftedSequence delta(const Trajectory& q, Side s) {
    return s == Side::plus ? delta_plus(q) : delta_minus(q);
}

/// h * sum over I_sigma, per component.
inline Vec gauss_quadrature_components(const ShiftedSequence& v) {
    const int d = v.dim();
    Vec out(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) {
        CompensatedSum s;
        for (int k = v.first(); k <= v.last(); ++k) s += v(k, c);
        out[static_cast<std::size_t>(c)] = v.grid().step() * s.value();
    }
    return out;
}

/// Scalar quadrature; requires d = 1.
inline double gauss_quadrature(const ShiftedSequence& v) {
    if (v.dim() != 1) throw DomainError("gauss_quadrature expects a scalar sequence");
    return gauss_quadrature_components(v)[0];
}

struct IdentitySides {
    double lhs;
    double rhs;

    double gap() const noexcept { return std::abs(lhs - rhs); }
    bool holds(double rel_tol) const noexcept { return gap() <= rel_tol * (1.0 + std::abs(lhs)); }
};

inline double dot(ConstVec x, ConstVec y) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

/**
 * Both sides of the summation-by-parts identity
 *     sum_{k=1}^{N} (dm F)_k G_k = sum_{k=0}^{N-1} F_k (dp G)_k + (F_N G_N - F_0 G_0)/h
 * where dm, dp are delta_minus and delta_plus. Products are Euclidean dot products.
 */
inline IdentitySides check_discrete_ibp(const Trajectory& f, const Trajectory& g) {
    require_same_shape(f, g);
    const int n = f.grid().intervals();
    const auto df = delta_minus(f);
    const auto dg = delta_plus(g);

    CompensatedSum lhs;
    for (int k = 1; k <= n; ++k) lhs += dot(df[k], g[k]);

    CompensatedSum rhs;
    for (int k = 0; k < n; ++k) rhs += dot(f[k], dg[k]);
    rhs += (dot(f[n], g[n]) - dot(f[0], g[0])) / f.grid().step();

    return {lhs.value(), rhs.value()};
}

}  // namespace fracvi
