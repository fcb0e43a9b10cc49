#pragma once

/**
 * @file fracops.hpp
 * @brief Grunwald-Letnikov weights and the discrete fractional operators.
 *
 * Weights w_r = (-1)^r binom(alpha, r) are generated by
 *     w_0 = 1,   w_r = w_{r-1} (r - 1 - alpha) / r.
 *
 * The left operator (side minus) is a causal convolution with the weights,
 *     (D- Q)_k = h^-alpha sum_{r=0}^{k} w_r Q_{k-r},      k = 1..N,
 * and the right operator (side plus) is its mirror image,
 *     (D+ Q)_k = h^-alpha sum_{r=0}^{N-k} w_r Q_{k+r},    k = 0..N-1.
 * For alpha = 1 both collapse onto delta_minus / delta_plus.
 *
 * Kernels are direct O(N^2) sums; above kCompensationThreshold subintervals the
 * inner sums switch to compensated accumulation.
 */

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "fracvi/diffops.hpp"
#include "fracvi/grid.hpp"
#include "fracvi/summation.hpp"

namespace fracvi {

inline constexpr int kCompensationThreshold = 128;

class GLCoefficients {
public:
    GLCoefficients(double alpha, int n) : alpha_(alpha) {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("GL order must be positive");
        if (n < 0) throw DomainError("GL coefficient count must be non-negative");
        w_.resize(static_cast<std::size_t>(n) + 1);
        w_[0] = 1.0;
        for (int r = 1; r <= n; ++r)
            w_[static_cast<std::size_t>(r)] = w_[static_cast<std::size_t>(r) - 1] * ((r - 1 - alpha) / r);
    }

    double alpha() const noexcept { return alpha_; }
    /// Highest weight index n.
    int order() const noexcept { return static_cast<int>(w_.size()) - 1; }
    double operator[](int r) const { return w_.at(static_cast<std::size_t>(r)); }
    const std::vector<double>& weights() const noexcept { return w_; }

private:
    double alpha_;
    std::vector<double> w_;
};

inline GLCoefficients gl_coefficients(double alpha, int n) { return GLCoefficients(alpha, n); }

namespace detail {

inline void require_weights_for(const GLCoefficients& w, const Trajectory& q) {
    if (w.order() < q.grid().intervals())
        throw DomainError("GL coefficients too short for this grid");
}

// sum_{r=0}^{count-1} w_r * Q[start + stride*r], per component, into out.
inline void gl_gather(const GLCoefficients& w, const Trajectory& q, int start, int stride, int count,
                      double scale, double* out) {
    const int d = q.dim();
    const auto& wt = w.weights();
    const auto data = q.flat();
    const bool compensate = q.grid().intervals() > kCompensationThreshold;
    for (int c = 0; c < d; ++c) {
        if (compensate) {
            CompensatedSum s;
            for (int r = 0; r < count; ++r)
                s += wt[static_cast<std::size_t>(r)] *
                     data[static_cast<std::size_t>(start + stride * r) * d + c];
            out[c] = s.value() / scale;
        } else {
            double s = 0.0;
            for (int r = 0; r < count; ++r)
                s += wt[static_cast<std::size_t>(r)] *
                     data[static_cast<std::size_t>(start + stride * r) * d + c];
            out[c] = s / scale;
        }
    }
}

}  // namespace detail

inline ShiftedSequence delta_alpha_minus(const Trajectory& q, const GLCoefficients& w) {
    detail::require_weights_for(w, q);
    const int n = q.grid().intervals();
    const int d = q.dim();
    const double scale = std::pow(q.grid().step(), w.alpha());
    Vec out(static_cast<std::size_t>(n) * d);
    for (int k = 1; k <= n; ++k)
        detail::gl_gather(w, q, k, -1, k + 1, scale, out.data() + static_cast<std::size_t>(k - 1) * d);
    return ShiftedSequence(q.grid(), d, Side::minus, std::move(out));
}

inline ShiftedSequence delta_alpha_plus(const Trajectory& q, const GLCoefficients& w) {
    detail::require_weights_for(w, q);
    const int n = q.grid().intervals();
    const int d = q.dim();
    const double scale = std::pow(q.grid().step(), w.alpha());
    Vec out(static_cast<std::size_t>(n) * d);
    for (int k = 0; k < n; ++k)
        detail::gl_gather(w, q, k, +1, n - k + 1, scale, out.data() + static_cast<std::size_t>(k) * d);
    return ShiftedSequence(q.grid(), d, Side::plus, std::move(out));
}

inline ShiftedSequence delta_alpha_minus(const Trajectory& q, double alpha) {
    return delta_alpha_minus(q, GLCoefficients(alpha, q.grid().intervals()));
}

inline ShiftedSequence delta_alpha_plus(const Trajectory& q, double alpha) {
    return delta_alpha_plus(q, GLCoefficients(alpha, q.grid().intervals()));
}

inline ShiftedSequence delta_alpha(const Trajectory& q, Side s, const GLCoefficients& w) {
    return s == Side::plus ? delta_alpha_plus(q, w) : delta_alpha_minus(q, w);
}

/**
 * Both sides of the fractional summation-by-parts identity
 *     sum_{k=1}^{N} (D- F)_k G_k = sum_{k=0}^{N-1} F_k (D+ G)_k,
 * valid when F or G vanishes at both endpoints. Throws DomainError otherwise.
 */
inline IdentitySides check_discrete_frac_ibp(const Trajectory& f, const Trajectory& g, double alpha) {
    require_same_shape(f, g);
    const int n = f.grid().intervals();
    auto vanishes = [](ConstVec x) {
        for (double v : x)
            if (v != 0.0) return false;
        return true;
    };
    const bool f_pinned = vanishes(f[0]) && vanishes(f[n]);
    const bool g_pinned = vanishes(g[0]) && vanishes(g[n]);
    if (!f_pinned && !g_pinned)
        throw DomainError("fractional summation by parts needs F or G zero at both endpoints");

    const GLCoefficients w(alpha, n);
    const auto df = delta_alpha_minus(f, w);
    const auto dg = delta_alpha_plus(g, w);

    CompensatedSum lhs;
    for (int k = 1; k <= n; ++k) lhs += dot(df[k], g[k]);
    CompensatedSum rhs;
    for (int k = 0; k < n; ++k) rhs += dot(f[k], dg[k]);
    return {lhs.value(), rhs.value()};
}

/// Gamma function for x > 0.
inline double gamma_fn(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("gamma_fn requires finite x > 0");
    return std::tgamma(x);
}

/**
 * Left fractional derivative (lower limit a) of f(t) = (t - a)^beta at t = a + s:
 *     Gamma(beta + 1) / Gamma(beta + 1 - alpha) * s^(beta - alpha).
 * alpha = 1 is admitted and gives the classical derivative.
 */
inline double rl_monomial_derivative(double beta, double alpha, double s) {
    if (!(beta > -1.0)) throw DomainError("monomial exponent must exceed -1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("order must lie in (0, 1]");
    if (!(s > 0.0)) throw DomainError("evaluation point must lie strictly after the lower limit");
    if (!(beta + 1.0 - alpha > 0.0)) throw DomainError("beta + 1 - alpha must be positive");
    return gamma_fn(beta + 1.0) / gamma_fn(beta + 1.0 - alpha) * std::pow(s, beta - alpha);
}

}  // namespace fracvi
