#pragma once

/**
 * @file solver.hpp
 * @brief Newton's method for the fixed-endpoint discrete Euler-Lagrange
 *        systems, and forward marching for the direct classical scheme.
 *
 * The unknowns are the interior nodes Q_1..Q_{N-1}; Q_0 and Q_N are copied
 * from the boundary data and never touched. The Jacobian is a dense forward
 * finite-difference approximation, factored by LU with partial pivoting, and
 * each Newton step is damped by backtracking on the residual max-norm.
 *
 * Near the solution the residual of a second-order stencil cannot fall below
 * roughly eps * |Q| / h^2. When the line search finds no decrease and the
 * Newton step is already below sqrt(eps) * (1 + |Q|), the iterate is returned
 * as converged with `stalled_at_roundoff` set.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracvi/grid.hpp"
#include "fracvi/lagrangian.hpp"
#include "fracvi/linalg.hpp"
#include "fracvi/schemes.hpp"

namespace fracvi {

struct NewtonConfig {
    double tol = 1e-12;      // residual max-norm target
    int max_iter = 50;
    double fd_step = 1e-6;   // Jacobian column j uses fd_step * (1 + |x_j|)
    double damping = 0.5;    // backtracking factor
    int max_backtracks = 40;

    void validate() const {
        if (!(tol > 0.0)) throw DomainError("Newton tolerance must be positive");
        if (max_iter < 1) throw DomainError("Newton needs at least one iteration");
        if (!(fd_step > 0.0)) throw DomainError("finite-difference step must be positive");
        if (!(damping > 0.0 && damping < 1.0)) throw DomainError("damping must lie in (0, 1)");
        if (max_backtracks < 0) throw DomainError("negative backtrack count");
    }
};

struct IterationRecord {
    int iter;
    double residual_norm;
    double step_norm;
};

struct NewtonDiagnostics {
    std::vector<IterationRecord> history;  // entry 0 is the initial guess
    int iterations = 0;
    bool converged = false;
    bool stalled_at_roundoff = false;

    double final_residual() const { return history.empty() ? NAN : history.back().residual_norm; }
};

/// `iter,residual_norm,step_norm`
inline void write_csv(std::ostream& os, const NewtonDiagnostics& diag) {
    std::ostringstream buf;
    buf << std::setprecision(17) << "iter,residual_norm,step_norm\n";
    for (const auto& rec : diag.history) buf << rec.iter << ',' << rec.residual_norm << ',' << rec.step_norm << '\n';
    os << buf.str();
}

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, Vec last_iterate, NewtonDiagnostics diag)
        : std::runtime_error(what), last_(std::move(last_iterate)), diag_(std::move(diag)) {}

    /// Flat last iterate: the full trajectory for BVP solves, the node value for marching steps.
    const Vec& last_iterate() const noexcept { return last_; }
    const NewtonDiagnostics& diagnostics() const noexcept { return diag_; }

private:
    Vec last_;
    NewtonDiagnostics diag_;
};

namespace detail {

using SystemFn = std::function<Vec(const Vec&)>;

inline double max_abs(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline Matrix fd_jacobian(const SystemFn& f, const Vec& x, const Vec& fx, double rel_step) {
    const int m = static_cast<int>(x.size());
    Matrix jac(static_cast<int>(fx.size()), m);
    Vec xp = x;
    for (int j = 0; j < m; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        xp[uj] = x[uj] + rel_step * (1.0 + std::abs(x[uj]));
        const double dx = xp[uj] - x[uj];
        const Vec fp = f(xp);
        for (int i = 0; i < jac.rows(); ++i)
            jac(i, j) = (fp[static_cast<std::size_t>(i)] - fx[static_cast<std::size_t>(i)]) / dx;
        xp[uj] = x[uj];
    }
    return jac;
}

struct NewtonResult {
    Vec x;
    NewtonDiagnostics diag;
};

inline NewtonResult newton(const SystemFn& f, Vec x, const NewtonConfig& cfg) {
    cfg.validate();
    const double stall_step = std::sqrt(std::numeric_limits<double>::epsilon());
    NewtonDiagnostics diag;
    Vec r = f(x);
    if (r.size() != x.size()) throw DomainError("nonlinear system is not square");
    double rn = max_abs(r);
    diag.history.push_back({0, rn, 0.0});

    for (int it = 1; it <= cfg.max_iter && !(rn <= cfg.tol); ++it) {
        if (!std::isfinite(rn)) break;
        const Matrix jac = fd_jacobian(f, x, r, cfg.fd_step);
        Vec rhs(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
        const Vec dx = lu_solve(jac, rhs);
        const double step_norm = max_abs(dx);

        double lambda = 1.0;
        bool accepted = false;
        Vec xt(x.size()), rt;
        for (int ls = 0; ls <= cfg.max_backtracks; ++ls, lambda *= cfg.damping) {
            for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + lambda * dx[i];
            rt = f(xt);
            if (max_abs(rt) < rn) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (step_norm <= stall_step * (1.0 + max_abs(x))) {
                diag.stalled_at_roundoff = true;
                diag.converged = true;
                return {std::move(x), std::move(diag)};
            }
            throw ConvergenceError("line search failed to reduce the residual at iteration " + std::to_string(it),
                                   std::move(x), std::move(diag));
        }
        x.swap(xt);
        r.swap(rt);
        rn = max_abs(r);
        diag.iterations = it;
        diag.history.push_back({it, rn, lambda * step_norm});
    }
    if (!(rn <= cfg.tol))
        throw ConvergenceError("Newton did not reach tolerance in " + std::to_string(cfg.max_iter) + " iterations",
                               std::move(x), std::move(diag));
    diag.converged = true;
    return {std::move(x), std::move(diag)};
}

}  // namespace detail

/// Fixed-endpoint problem: Q_0 = qa, Q_N = qb, interior from the scheme's residual.
struct BVPProblem {
    Grid grid;
    Lagrangian lagrangian;
    SchemeKind scheme;
    Vec qa;
    Vec qb;

    void validate() const {
        if (static_cast<int>(qa.size()) != lagrangian.dim || static_cast<int>(qb.size()) != lagrangian.dim)
            throw DomainError("boundary values do not match the Lagrangian dimension");
    }
};

struct BVPSolution {
    Trajectory trajectory;
    NewtonDiagnostics diagnostics;
};

/// Straight line from qa to qb.
inline Trajectory linear_guess(const Grid& grid, const Vec& qa, const Vec& qb) {
    if (qa.size() != qb.size() || qa.empty()) throw DomainError("boundary values differ in dimension");
    const int n = grid.intervals();
    const auto d = qa.size();
    Vec flat;
    flat.reserve((static_cast<std::size_t>(n) + 1) * d);
    flat.insert(flat.end(), qa.begin(), qa.end());
    for (int k = 1; k < n; ++k) {
        const double theta = static_cast<double>(k) / n;
        for (std::size_t c = 0; c < d; ++c) flat.push_back(qa[c] + theta * (qb[c] - qa[c]));
    }
    flat.insert(flat.end(), qb.begin(), qb.end());
    return Trajectory(grid, static_cast<int>(d), std::move(flat));
}

inline BVPSolution solve_bvp_newton(const BVPProblem& p, const Trajectory& init, const NewtonConfig& cfg = {}) {
    p.validate();
    if (!(init.grid() == p.grid) || init.dim() != p.lagrangian.dim)
        throw DomainError("initial guess does not live on the problem grid");
    const int n = p.grid.intervals();
    const int d = init.dim();
    auto same = [](ConstVec x, const Vec& y) { return std::equal(x.begin(), x.end(), y.begin(), y.end()); };
    if (!same(init[0], p.qa) || !same(init[n], p.qb))
        throw DomainError("initial guess does not satisfy the boundary values");

    const auto interior = static_cast<std::size_t>(n - 1) * d;
    auto assemble = [&](const Vec& x) {
        Vec flat;
        flat.reserve(interior + 2 * static_cast<std::size_t>(d));
        flat.insert(flat.end(), p.qa.begin(), p.qa.end());
        flat.insert(flat.end(), x.begin(), x.end());
        flat.insert(flat.end(), p.qb.begin(), p.qb.end());
        return Trajectory(p.grid, d, std::move(flat));
    };
    const detail::SystemFn system = [&](const Vec& x) {
        const auto res = residual(p.scheme, p.lagrangian, assemble(x));
        return Vec(res.flat().begin(), res.flat().end());
    };

    const auto f0 = init.flat();
    Vec x0(f0.begin() + d, f0.end() - d);
    try {
        auto [x, diag] = detail::newton(system, std::move(x0), cfg);
        return {assemble(x), std::move(diag)};
    } catch (const ConvergenceError& e) {
        const auto t = assemble(e.last_iterate());
        throw ConvergenceError(e.what(), Vec(t.flat().begin(), t.flat().end()), e.diagnostics());
    }
}

inline BVPSolution solve_bvp_newton(const BVPProblem& p, const NewtonConfig& cfg = {}) {
    return solve_bvp_newton(p, linear_guess(p.grid, p.qa, p.qb), cfg);
}

/**
 * Marches the direct classical scheme (side minus) forward from Q_0 = q0,
 * Q_1 = q1: for k = 2..N solves
 *     Lx(Q_k, V_k, t_k) - (Lv(Q_k, V_k, t_k) - Lv(Q_{k-1}, V_{k-1}, t_{k-1})) / h = 0,
 *     V_k = (Q_k - Q_{k-1}) / h,
 * for Q_k, starting each solve from 2 Q_{k-1} - Q_{k-2}.
 */
inline Trajectory march_direct_classical(const Lagrangian& l, const Grid& grid, Side s, const Vec& q0, const Vec& q1,
                                         const NewtonConfig& cfg = {}) {
    if (s != Side::minus) throw DomainError("direct marching runs forward and needs side minus");
    if (static_cast<int>(q0.size()) != l.dim || static_cast<int>(q1.size()) != l.dim)
        throw DomainError("initial values do not match the Lagrangian dimension");
    const int n = grid.intervals();
    const auto d = q0.size();
    const double h = grid.step();

    std::vector<Vec> q{q0, q1};
    q.reserve(static_cast<std::size_t>(n) + 1);
    for (int k = 2; k <= n; ++k) {
        const Vec& prev = q[static_cast<std::size_t>(k) - 1];
        const Vec& prev2 = q[static_cast<std::size_t>(k) - 2];
        Vec vprev(d);
        for (std::size_t c = 0; c < d; ++c) vprev[c] = (prev[c] - prev2[c]) / h;
        const Vec pprev = l.dv(prev, vprev, grid.node(k - 1));
        const double tk = grid.node(k);

        const detail::SystemFn step = [&](const Vec& x) {
            Vec v(d);
            for (std::size_t c = 0; c < d; ++c) v[c] = (x[c] - prev[c]) / h;
            Vec lx = l.dx(x, v, tk);
            const Vec pk = l.dv(x, v, tk);
            for (std::size_t c = 0; c < d; ++c) lx[c] -= (pk[c] - pprev[c]) / h;
            return lx;
        };
        Vec guess(d);
        for (std::size_t c = 0; c < d; ++c) guess[c] = 2.0 * prev[c] - prev2[c];
        try {
            q.push_back(detail::newton(step, std::move(guess), cfg).x);
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("marching step k=" + std::to_string(k) + ": " + e.what(), e.last_iterate(),
                                   e.diagnostics());
        }
    }
    return Trajectory::from_points(grid, q);
}

}  // namespace fracvi
