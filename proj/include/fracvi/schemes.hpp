#pragma once

/**
 * @file schemes.hpp
 * @brief Residual assemblers for the discrete Euler-Lagrange schemes and the
 *        coherence comparison between them.
 *
 * Two assembly routes exist and never share code past the velocity sequence:
 *
 *   direct       substitute discrete operators into a written form of the
 *                Euler-Lagrange operator,
 *                    R = Lx(Q, V, t) + c * Op(Lv(Q, V, t)),
 *                with the outer operator applied by gathering
 *                (DirectClassical, AsymmetricDirect, DirectFractional);
 *   variational  differentiate the discrete action (functional_gradient),
 *                i.e. scatter through the transposed velocity stencil
 *                (VariationalClassical, VariationalFractional).
 *
 * Index ranges are the maximal sets on which every term is defined:
 *   DirectClassical       2..N (minus)    0..N-2 (plus)
 *   everything else       1..N-1
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fracvi/diffops.hpp"
#include "fracvi/fracops.hpp"
#include "fracvi/grid.hpp"
#include "fracvi/lagrangian.hpp"

namespace fracvi {

class SchemeKind {
public:
    enum class Kind { direct_classical, variational_classical, asymmetric_direct, direct_fractional, variational_fractional };

    static SchemeKind direct_classical(Side s) { return {Kind::direct_classical, s, std::nullopt}; }
    static SchemeKind variational_classical(Side s) { return {Kind::variational_classical, s, std::nullopt}; }
    static SchemeKind asymmetric_direct(Side s) { return {Kind::asymmetric_direct, s, std::nullopt}; }
    static SchemeKind direct_fractional(Side s, double alpha) { return {Kind::direct_fractional, s, alpha}; }
    static SchemeKind variational_fractional(Side s, double alpha) { return {Kind::variational_fractional, s, alpha}; }

    SchemeKind(Kind kind, Side side, std::optional<double> alpha) : kind_(kind), side_(side), alpha_(alpha) {
        const bool fractional = kind == Kind::direct_fractional || kind == Kind::variational_fractional;
        if (fractional != alpha.has_value())
            throw DomainError("fractional schemes take an order, classical schemes do not");
        if (alpha) detail::require_fractional_order(*alpha);
    }

    Kind kind() const noexcept { return kind_; }
    Side side() const noexcept { return side_; }
    std::optional<double> alpha() const noexcept { return alpha_; }
    bool is_fractional() const noexcept { return alpha_.has_value(); }

    std::string name() const {
        switch (kind_) {
            case Kind::direct_classical: return "direct";
            case Kind::variational_classical: return "vi";
            case Kind::asymmetric_direct: return "asymmetric";
            case Kind::direct_fractional: return "fractional-direct";
            case Kind::variational_fractional: return "fractional-vi";
        }
        return "?";
    }

    /// Accepts the names produced by name().
    static SchemeKind parse(const std::string& name, Side s, std::optional<double> alpha) {
        if (name == "direct") return direct_classical(s);
        if (name == "vi") return variational_classical(s);
        if (name == "asymmetric") return asymmetric_direct(s);
        if (name == "fractional-direct") return direct_fractional(s, alpha.value_or(0.5));
        if (name == "fractional-vi") return variational_fractional(s, alpha.value_or(0.5));
        throw DomainError("unknown scheme '" + name + "'");
    }

private:
    Kind kind_;
    Side side_;
    std::optional<double> alpha_;
};

namespace detail {

// One discrete operator, described well enough to know which entries it reads.
struct DiscreteOperator {
    Side side;
    std::optional<GLCoefficients> weights;  // empty: first difference

    ShiftedSequence apply(const Trajectory& q) const {
        return weights ? delta_alpha(q, side, *weights) : delta(q, side);
    }

    // Node indices read when producing output k.
    IndexRange support(int k, int n) const {
        if (weights) return side == Side::plus ? IndexRange{k, n} : IndexRange{0, k};
        return side == Side::plus ? IndexRange{k, k + 1} : IndexRange{k - 1, k};
    }
};

inline DiscreteOperator difference_op(Side s) { return {s, std::nullopt}; }
inline DiscreteOperator gl_op(Side s, double alpha, int n) { return {s, GLCoefficients(alpha, n)}; }

// Embed a sequence on I_s into a full trajectory; entries outside I_s are zero
// and are never read by any retained output.
inline Trajectory lift(const ShiftedSequence& p) {
    const int n = p.grid().intervals();
    const int d = p.dim();
    Vec full(static_cast<std::size_t>(n + 1) * d, 0.0);
    std::copy(p.flat().begin(), p.flat().end(), full.begin() + static_cast<std::ptrdiff_t>(p.first()) * d);
    return Trajectory(p.grid(), d, std::move(full));
}

/*
 * R_k = Lx(Q_k, V_k, t_k) + outer_coef * (outer(P))_k
 * with V = vel_coef * vel_op(Q) and P = Lv(Q, V, t), over the largest index
 * range where V_k exists and outer(P)_k reads only defined entries of P.
 */
inline ResidualField substitute(const Lagrangian& l, const Trajectory& q, double vel_coef,
                                const DiscreteOperator& vel_op, double outer_coef,
                                const DiscreteOperator& outer_op) {
    require_dim(l, q);
    const Grid& g = q.grid();
    const int n = g.intervals();
    const int d = q.dim();

    const auto raw = vel_op.apply(q);
    Vec v(raw.flat().begin(), raw.flat().end());
    for (double& x : v) x *= vel_coef;
    const ShiftedSequence vel(g, d, raw.side(), std::move(v));
    const auto p = momentum(l, q, vel);
    const auto outer = outer_op.apply(lift(p));

    IndexRange valid{n + 1, -1};
    for (int k = outer.first(); k <= outer.last(); ++k) {
        const auto sup = outer_op.support(k, n);
        if (p.range().contains(sup.first) && p.range().contains(sup.last) && vel.range().contains(k)) {
            valid.first = std::min(valid.first, k);
            valid.last = std::max(valid.last, k);
        }
    }
    if (valid.empty()) throw DomainError("no node where every term of the scheme is defined");

    Vec out;
    out.reserve(static_cast<std::size_t>(valid.size()) * d);
    for (int k = valid.first; k <= valid.last; ++k) {
        Vec lx = l.dx(q[k], vel[k], g.node(k));
        if (static_cast<int>(lx.size()) != d) throw DomainError("Lx returned wrong dimension");
        auto ok = outer[k];
        for (int c = 0; c < d; ++c) out.push_back(lx[static_cast<std::size_t>(c)] + outer_coef * ok[c]);
    }
    return ResidualField(g, d, valid, std::move(out));
}

}  // namespace detail

/// Direct embedding of the Euler-Lagrange equation: Lx + sign(s) * delta_s(Lv).
inline ResidualField residual_direct_classical(const Lagrangian& l, const Trajectory& q, Side s) {
    if (q.grid().intervals() < 3) throw DomainError("direct classical scheme needs N >= 3");
    const double sg = sign(s);
    return detail::substitute(l, q, -sg, detail::difference_op(s), sg, detail::difference_op(s));
}

/// Variational integrator: the discrete action gradient.
inline ResidualField residual_vi_classical(const Lagrangian& l, const Trajectory& q, Side s) {
    return functional_gradient(l, q, s);
}

/// Direct embedding of the one-sided Euler-Lagrange equation: Lx - sign(s) * delta_{-s}(Lv).
inline ResidualField residual_asymmetric_direct(const Lagrangian& l, const Trajectory& q, Side s) {
    const double sg = sign(s);
    return detail::substitute(l, q, -sg, detail::difference_op(s), -sg, detail::difference_op(opposite(s)));
}

/// Direct embedding of the fractional Euler-Lagrange equation: Lx - sign(s) * D^alpha_{-s}(Lv).
inline ResidualField residual_direct_fractional(const Lagrangian& l, const Trajectory& q, Side s, double alpha) {
    detail::require_fractional_order(alpha);
    const int n = q.grid().intervals();
    const double sg = sign(s);
    return detail::substitute(l, q, -sg, detail::gl_op(s, alpha, n), -sg, detail::gl_op(opposite(s), alpha, n));
}

inline ResidualField residual_vi_fractional(const Lagrangian& l, const Trajectory& q, Side s, double alpha) {
    return functional_gradient(l, q, s, alpha);
}

/// (Q_{k+2} - 2Q_{k+1} + Q_k)/h^2 + (Q_{k+1} - Q_k)/h + Q_k for k = 0..N-2 (friction oscillator).
inline ResidualField newton_friction_direct(const Trajectory& q) {
    const int n = q.grid().intervals();
    const int d = q.dim();
    const double h = q.grid().step();
    Vec out;
    out.reserve(static_cast<std::size_t>(n - 1) * d);
    for (int k = 0; k <= n - 2; ++k)
        for (int c = 0; c < d; ++c)
            out.push_back((q(k + 2, c) - 2.0 * q(k + 1, c) + q(k, c)) / (h * h) + (q(k + 1, c) - q(k, c)) / h +
                          q(k, c));
    return ResidualField(q.grid(), d, {0, n - 2}, std::move(out));
}

inline ResidualField residual(const SchemeKind& scheme, const Lagrangian& l, const Trajectory& q) {
    using K = SchemeKind::Kind;
    switch (scheme.kind()) {
        case K::direct_classical: return residual_direct_classical(l, q, scheme.side());
        case K::variational_classical: return residual_vi_classical(l, q, scheme.side());
        case K::asymmetric_direct: return residual_asymmetric_direct(l, q, scheme.side());
        case K::direct_fractional: return residual_direct_fractional(l, q, scheme.side(), *scheme.alpha());
        case K::variational_fractional: return residual_vi_fractional(l, q, scheme.side(), *scheme.alpha());
    }
    throw DomainError("unknown scheme");
}

/// Which pair of assembly routes a coherence report compares.
enum class CoherenceFamily {
    classical,   // DirectClassical vs VariationalClassical
    asymmetric,  // AsymmetricDirect vs VariationalClassical
    fractional   // DirectFractional vs VariationalFractional
};

inline const char* to_string(CoherenceFamily f) noexcept {
    switch (f) {
        case CoherenceFamily::classical: return "classical";
        case CoherenceFamily::asymmetric: return "asymmetric";
        case CoherenceFamily::fractional: return "fractional";
    }
    return "?";
}

inline constexpr double kCoherenceTolerance = 1e-10;

struct CoherenceReport {
    CoherenceFamily family;
    Side side;
    std::optional<double> alpha;
    int intervals;
    IndexRange shared;
    std::vector<double> gaps;  // per shared index, max over components
    double gap;                // max over gaps
    int witness;               // index attaining gap
    double scale;              // max inf-norm of the two residuals on the shared range
    bool coherent;

    double gap_at(int k) const { return gaps.at(static_cast<std::size_t>(k - shared.first)); }
};

inline CoherenceReport coherence_report(const Lagrangian& l, const Trajectory& q, Side s, CoherenceFamily family,
                                        std::optional<double> alpha = std::nullopt) {
    std::optional<ResidualField> direct, variational;
    switch (family) {
        case CoherenceFamily::classical:
            direct = residual_direct_classical(l, q, s);
            variational = residual_vi_classical(l, q, s);
            alpha.reset();
            break;
        case CoherenceFamily::asymmetric:
            direct = residual_asymmetric_direct(l, q, s);
            variational = residual_vi_classical(l, q, s);
            alpha.reset();
            break;
        case CoherenceFamily::fractional:
            if (!alpha) throw DomainError("fractional coherence needs an order");
            direct = residual_direct_fractional(l, q, s, *alpha);
            variational = residual_vi_fractional(l, q, s, *alpha);
            break;
    }
    const IndexRange shared = intersect(direct->range(), variational->range());
    if (shared.empty()) throw DomainError("residual index ranges do not overlap");

    CoherenceReport rep{family, s, alpha, q.grid().intervals(), shared, {}, 0.0, shared.first, 0.0, false};
    for (int k = shared.first; k <= shared.last; ++k) {
        double g = 0.0;
        auto x = (*direct)[k];
        auto y = (*variational)[k];
        for (std::size_t c = 0; c < x.size(); ++c) {
            g = std::max(g, std::abs(x[c] - y[c]));
            rep.scale = std::max({rep.scale, std::abs(x[c]), std::abs(y[c])});
        }
        rep.gaps.push_back(g);
        if (g > rep.gap) {
            rep.gap = g;
            rep.witness = k;
        }
    }
    rep.coherent = rep.gap <= kCoherenceTolerance * (1.0 + rep.scale);
    return rep;
}

inline const char* verdict(const CoherenceReport& r) noexcept { return r.coherent ? "COHERENT" : "NOT COHERENT"; }

inline constexpr const char* kCoherenceCsvHeader = "scheme,sigma,alpha,N,gap,verdict";

/// `scheme,sigma,alpha,N,gap,verdict`; alpha is empty for classical families.
inline std::string csv_row(const CoherenceReport& r) {
    std::ostringstream os;
    os << std::setprecision(17) << to_string(r.family) << ',' << to_string(r.side) << ',';
    if (r.alpha) os << *r.alpha;
    os << ',' << r.intervals << ',' << r.gap << ',' << verdict(r);
    return os.str();
}

inline void write_text(std::ostream& os, const CoherenceReport& r) {
    std::ostringstream buf;
    buf << std::setprecision(6) << to_string(r.family) << " sigma=" << to_string(r.side);
    if (r.alpha) buf << " alpha=" << *r.alpha;
    buf << " N=" << r.intervals << " shared=[" << r.shared.first << ',' << r.shared.last << "]"
        << " gap=" << r.gap << " at k=" << r.witness << " scale=" << r.scale << " -> " << verdict(r) << '\n';
    os << buf.str();
}

}  // namespace fracvi
