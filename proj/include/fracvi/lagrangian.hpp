#pragma once

/**
 * @file lagrangian.hpp
 * @brief Lagrangians, built-in mechanical problems, discrete action sums and
 *        their gradients.
 *
 * The discrete action on side s is
 *     S_h(Q) = h * sum_{k in I_s} L(Q_k, V_k, t_k),   V = -sign(s) * delta_s(Q)
 * with delta_s either the first difference or the Grunwald-Letnikov operator.
 *
 * functional_gradient() returns (1/h) dS_h/dQ_k at the interior nodes
 * k = 1..N-1. It is assembled by scattering Lv through the transpose of the
 * velocity stencil. It never calls the opposite-side operators; the direct
 * substitution assemblers in schemes.hpp do that, and the two are compared.
 */

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracvi/diffops.hpp"
#include "fracvi/fracops.hpp"
#include "fracvi/grid.hpp"
#include "fracvi/summation.hpp"

namespace fracvi {

/// L(x, v, t) with its partial gradients. All three callables must be pure.
struct Lagrangian {
    int dim = 1;
    std::function<double(ConstVec x, ConstVec v, double t)> value;
    std::function<Vec(ConstVec x, ConstVec v, double t)> dx;
    std::function<Vec(ConstVec x, ConstVec v, double t)> dv;
    std::string name;
};

struct Potential {
    std::function<double(ConstVec)> value;
    std::function<Vec(ConstVec)> gradient;
};

inline Potential zero_potential() {
    return {[](ConstVec) { return 0.0; }, [](ConstVec x) { return Vec(x.size(), 0.0); }};
}

/// U(x) = omega^2 |x|^2 / 2
inline Potential harmonic_potential(double omega) {
    const double w2 = omega * omega;
    return {[w2](ConstVec x) {
                double s = 0.0;
                for (double xi : x) s += xi * xi;
                return 0.5 * w2 * s;
            },
            [w2](ConstVec x) {
                Vec g(x.begin(), x.end());
                for (double& gi : g) gi *= w2;
                return g;
            }};
}

/// U(x) = omega^2 sum_i (1 - cos x_i)
inline Potential pendulum_potential(double omega) {
    const double w2 = omega * omega;
    return {[w2](ConstVec x) {
                double s = 0.0;
                for (double xi : x) s += 1.0 - std::cos(xi);
                return w2 * s;
            },
            [w2](ConstVec x) {
                Vec g(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) g[i] = w2 * std::sin(x[i]);
                return g;
            }};
}

/// L(x, v, t) = |v|^2 / 2 - U(x); Lv = v and Lx = -grad U exactly.
inline Lagrangian mechanical_lagrangian(int dim, Potential potential, std::string name = "mechanical") {
    if (dim < 1) throw DomainError("dimension must be positive");
    auto u = std::make_shared<Potential>(std::move(potential));
    Lagrangian l;
    l.dim = dim;
    l.name = std::move(name);
    l.value = [u](ConstVec x, ConstVec v, double) {
        double kin = 0.0;
        for (double vi : v) kin += vi * vi;
        return 0.5 * kin - u->value(x);
    };
    l.dx = [u](ConstVec x, ConstVec, double) {
        Vec g = u->gradient(x);
        for (double& gi : g) gi = -gi;
        return g;
    };
    l.dv = [](ConstVec, ConstVec v, double) { return Vec(v.begin(), v.end()); };
    return l;
}

/// A named built-in mechanical problem.
struct Problem {
    std::string name;
    double omega = 1.0;
    Potential potential;
    Lagrangian lagrangian;
};

/// `free`, `harmonic` or `pendulum`.
inline Problem make_problem(const std::string& name, int dim = 1, double omega = 1.0) {
    Potential u;
    if (name == "free")
        u = zero_potential();
    else if (name == "harmonic")
        u = harmonic_potential(omega);
    else if (name == "pendulum")
        u = pendulum_potential(omega);
    else
        throw DomainError("unknown problem '" + name + "' (expected free, harmonic or pendulum)");
    Problem p{name, omega, u, mechanical_lagrangian(dim, u, name)};
    return p;
}

namespace detail {

inline void require_dim(const Lagrangian& l, const Trajectory& q) {
    if (l.dim != q.dim()) throw DomainError("Lagrangian and trajectory dimensions differ");
}

inline void require_fractional_order(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("fractional order must lie in (0, 1]");
}

inline ShiftedSequence negate_if_plus(ShiftedSequence s) {
    if (s.side() == Side::minus) return s;
    Vec v(s.flat().begin(), s.flat().end());
    for (double& x : v) x = -x;
    return ShiftedSequence(s.grid(), s.dim(), s.side(), std::move(v));
}

inline double action_sum(const Lagrangian& l, const Trajectory& q, const ShiftedSequence& vel) {
    CompensatedSum s;
    for (int k = vel.first(); k <= vel.last(); ++k) s += l.value(q[k], vel[k], q.grid().node(k));
    return q.grid().step() * s.value();
}

// Lv(Q_k, V_k, t_k) over the velocity's index set.
inline ShiftedSequence momentum(const Lagrangian& l, const Trajectory& q, const ShiftedSequence& vel) {
    Vec out;
    out.reserve(vel.flat().size());
    for (int k = vel.first(); k <= vel.last(); ++k) {
        Vec p = l.dv(q[k], vel[k], q.grid().node(k));
        if (static_cast<int>(p.size()) != q.dim()) throw DomainError("Lv returned wrong dimension");
        out.insert(out.end(), p.begin(), p.end());
    }
    return ShiftedSequence(q.grid(), q.dim(), vel.side(), std::move(out));
}

/*
 * Interior gradient of the action for a velocity of the form
 *     V_k = -sign(s) / scale * sum_r w_r Q_{k + stride*r},   stride = +1 (plus) or -1 (minus),
 * via the transpose of that stencil:
 *     G_j = Lx_j - sign(s) / scale * sum_{k, r : k + stride*r = j} w_r P_k.
 */
inline ResidualField scatter_gradient(const Lagrangian& l, const Trajectory& q, const ShiftedSequence& vel,
                                      std::span<const double> w, double scale) {
    const Grid& g = q.grid();
    const int n = g.intervals();
    const int d = q.dim();
    const Side s = vel.side();
    const int stride = s == Side::plus ? 1 : -1;
    const auto p = momentum(l, q, vel);
    const bool compensate = n > kCompensationThreshold;

    std::vector<CompensatedSum> acc(compensate ? static_cast<std::size_t>(n + 1) * d : 0);
    Vec plain(compensate ? 0 : static_cast<std::size_t>(n + 1) * d, 0.0);
    for (int k = vel.first(); k <= vel.last(); ++k) {
        auto pk = p[k];
        for (int r = 0; r < static_cast<int>(w.size()); ++r) {
            const int j = k + stride * r;
            if (j < 0 || j > n) break;
            for (int c = 0; c < d; ++c) {
                const double term = w[static_cast<std::size_t>(r)] * pk[c];
                const auto idx = static_cast<std::size_t>(j) * d + c;
                if (compensate)
                    acc[idx] += term;
                else
                    plain[idx] += term;
            }
        }
    }

    const double adj_sign = -static_cast<double>(sign(s));
    Vec out;
    out.reserve(static_cast<std::size_t>(n - 1) * d);
    for (int j = 1; j <= n - 1; ++j) {
        Vec lx = l.dx(q[j], vel[j], g.node(j));
        if (static_cast<int>(lx.size()) != d) throw DomainError("Lx returned wrong dimension");
        for (int c = 0; c < d; ++c) {
            const auto idx = static_cast<std::size_t>(j) * d + c;
            const double sj = compensate ? acc[idx].value() : plain[idx];
            out.push_back(lx[static_cast<std::size_t>(c)] + adj_sign * (sj / scale));
        }
    }
    return ResidualField(g, d, {1, n - 1}, std::move(out));
}

}  // namespace detail

/// -sign(s) * delta_s(Q), the first-order discrete velocity on I_s.
inline ShiftedSequence discrete_velocity(const Trajectory& q, Side s) {
    return detail::negate_if_plus(delta(q, s));
}

/// -sign(s) * D^alpha_s(Q), the Grunwald-Letnikov discrete velocity on I_s.
inline ShiftedSequence discrete_velocity(const Trajectory& q, Side s, const GLCoefficients& w) {
    return detail::negate_if_plus(delta_alpha(q, s, w));
}

inline double discrete_functional_classical(const Lagrangian& l, const Trajectory& q, Side s) {
    detail::require_dim(l, q);
    return detail::action_sum(l, q, discrete_velocity(q, s));
}

inline double discrete_functional_fractional(const Lagrangian& l, const Trajectory& q, Side s, double alpha) {
    detail::require_dim(l, q);
    detail::require_fractional_order(alpha);
    const GLCoefficients w(alpha, q.grid().intervals());
    return detail::action_sum(l, q, discrete_velocity(q, s, w));
}

/// (1/h) dS_h/dQ_k for k = 1..N-1, first-difference velocity.
inline ResidualField functional_gradient(const Lagrangian& l, const Trajectory& q, Side s) {
    detail::require_dim(l, q);
    static constexpr double kFirstDifference[] = {1.0, -1.0};
    return detail::scatter_gradient(l, q, discrete_velocity(q, s), kFirstDifference, q.grid().step());
}

/// (1/h) dS_h/dQ_k for k = 1..N-1, Grunwald-Letnikov velocity of order alpha.
inline ResidualField functional_gradient(const Lagrangian& l, const Trajectory& q, Side s, double alpha) {
    detail::require_dim(l, q);
    detail::require_fractional_order(alpha);
    const GLCoefficients w(alpha, q.grid().intervals());
    return detail::scatter_gradient(l, q, discrete_velocity(q, s, w), w.weights(),
                                    std::pow(q.grid().step(), alpha));
}

inline ResidualField functional_gradient(const Lagrangian& l, const Trajectory& q, Side s,
                                         std::optional<double> alpha) {
    return alpha ? functional_gradient(l, q, s, *alpha) : functional_gradient(l, q, s);
}

}  // namespace fracvi
