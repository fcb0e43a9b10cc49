#pragma once

/**
 * @file experiments.hpp
 * @brief Reproducible experiments: randomized summation-by-parts checks,
 *        coherence sweeps, convergence tables and the GL/closed-form check.
 *
 * Everything here is deterministic given a seed. Tables are emitted as CSV
 * with 17 significant digits and LF line endings.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fracvi/diffops.hpp"
#include "fracvi/fracops.hpp"
#include "fracvi/grid.hpp"
#include "fracvi/lagrangian.hpp"
#include "fracvi/schemes.hpp"
#include "fracvi/solver.hpp"

namespace fracvi {

inline constexpr double kClassicalIbpTolerance = 1e-12;
inline constexpr double kFractionalIbpTolerance = 1e-10;

using Rng = std::mt19937_64;

/// Entries uniform in [-1, 1].
inline Trajectory random_trajectory(const Grid& grid, int dim, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec v(static_cast<std::size_t>(grid.intervals() + 1) * dim);
    for (double& x : v) x = u(rng);
    return Trajectory(grid, dim, std::move(v));
}

inline Trajectory with_zero_endpoints(const Trajectory& q) {
    Vec v(q.flat().begin(), q.flat().end());
    const int d = q.dim();
    std::fill(v.begin(), v.begin() + d, 0.0);
    std::fill(v.end() - d, v.end(), 0.0);
    return Trajectory(q.grid(), d, std::move(v));
}

/// Q_k = k^3 in every component.
inline Trajectory cubic_witness(const Grid& grid, int dim = 1) {
    Vec v;
    for (int k = 0; k <= grid.intervals(); ++k) v.insert(v.end(), static_cast<std::size_t>(dim), double(k) * k * k);
    return Trajectory(grid, dim, std::move(v));
}

struct IbpSummary {
    std::string name;
    int trials = 0;
    double max_gap = 0.0;      // max |lhs - rhs|
    double max_rel_gap = 0.0;  // max |lhs - rhs| / (1 + |lhs|)
    double tolerance = 0.0;
    bool passed() const noexcept { return max_rel_gap <= tolerance; }
};

struct IbpSettings {
    std::uint64_t seed = 7;
    int trials = 100;
    int intervals = 0;  // 0: draw N uniformly from [2, max_intervals]
    int max_intervals = 200;
    int dim = 0;        // 0: draw d uniformly from {1, 2, 3}
    double a = 0.0;
    double b = 1.0;
};

namespace detail {

template <class Check>
IbpSummary run_ibp_trials(std::string name, const IbpSettings& cfg, double tol, Check&& check) {
    Rng rng(cfg.seed);
    std::uniform_int_distribution<int> pick_n(2, std::max(2, cfg.max_intervals));
    std::uniform_int_distribution<int> pick_d(1, 3);
    IbpSummary s{std::move(name), cfg.trials, 0.0, 0.0, tol};
    for (int t = 0; t < cfg.trials; ++t) {
        const int n = cfg.intervals > 0 ? cfg.intervals : pick_n(rng);
        const int d = cfg.dim > 0 ? cfg.dim : pick_d(rng);
        const Grid g(cfg.a, cfg.b, n);
        const auto f = random_trajectory(g, d, rng);
        const auto h = random_trajectory(g, d, rng);
        const IdentitySides sides = check(t, f, h);
        s.max_gap = std::max(s.max_gap, sides.gap());
        s.max_rel_gap = std::max(s.max_rel_gap, sides.gap() / (1.0 + std::abs(sides.lhs)));
    }
    return s;
}

}  // namespace detail

inline IbpSummary classical_ibp_trials(const IbpSettings& cfg) {
    return detail::run_ibp_trials("classical", cfg, kClassicalIbpTolerance,
                                  [](int, const Trajectory& f, const Trajectory& g) { return check_discrete_ibp(f, g); });
}

/// Even trials pin F to zero at both ends, odd trials pin G.
inline IbpSummary fractional_ibp_trials(const IbpSettings& cfg, double alpha) {
    std::ostringstream name;
    name << "fractional(alpha=" << alpha << ")";
    return detail::run_ibp_trials(name.str(), cfg, kFractionalIbpTolerance,
                                  [alpha](int t, const Trajectory& f, const Trajectory& g) {
                                      return t % 2 == 0 ? check_discrete_frac_ibp(with_zero_endpoints(f), g, alpha)
                                                        : check_discrete_frac_ibp(f, with_zero_endpoints(g), alpha);
                                  });
}

// ---------------------------------------------------------------------------
// Convergence studies
// ---------------------------------------------------------------------------

struct ConvergenceSettings {
    std::string problem = "harmonic";
    double omega = 1.0;
    double a = 0.0;
    double b = 1.0;
    std::string scheme = "vi";  // direct (marching), vi, asymmetric, fractional-vi, fractional-direct
    Side side = Side::minus;
    std::optional<double> alpha;
    std::vector<int> intervals{16, 32, 64, 128};
    std::optional<Vec> qa;
    std::optional<Vec> qb;
    int reference_factor = 4;  // self-reference grid: factor * max(intervals)
    NewtonConfig newton{};
};

struct ConvergenceRow {
    int intervals;
    double h;
    double error;
    std::optional<double> observed_order;  // log2(error(N) / error(2N))
};

/// Closed-form reference solution of the continuous problem, when one is known.
using ExactSolution = std::function<Vec(double)>;

/**
 * Boundary values and exact solution for a classical problem:
 *   free      straight line (defaults qa = 0, qb = 1)
 *   harmonic  q'' = -omega^2 q (defaults give q = cos w(t-a) + sin w(t-a) / 2;
 *             fractional runs default to qa = 0, where the action stays finite)
 *   pendulum  none
 */
struct ReferenceProblem {
    Vec qa;
    Vec qb;
    std::optional<ExactSolution> exact;
};

inline ReferenceProblem reference_problem(const std::string& problem, double omega, double a, double b,
                                          std::optional<Vec> qa, std::optional<Vec> qb, bool fractional) {
    ReferenceProblem r;
    const double span = b - a;
    if (problem == "harmonic") {
        r.qa = qa.value_or(Vec{fractional ? 0.0 : 1.0});
        r.qb = qb.value_or(Vec(r.qa.size(), std::cos(omega * span) + 0.5 * std::sin(omega * span)));
    } else {
        r.qa = qa.value_or(Vec{0.0});
        r.qb = qb.value_or(Vec(r.qa.size(), 1.0));
    }
    if (r.qa.size() != r.qb.size()) throw DomainError("qa and qb differ in dimension");
    if (fractional) return r;
    if (problem == "free") {
        r.exact = [qa = r.qa, qb = r.qb, a, span](double t) {
            Vec q(qa.size());
            for (std::size_t c = 0; c < q.size(); ++c) q[c] = qa[c] + (t - a) / span * (qb[c] - qa[c]);
            return q;
        };
    } else if (problem == "harmonic") {
        const double denom = std::sin(omega * span);
        if (std::abs(denom) < 1e-12) throw DomainError("harmonic interval length hits a resonance");
        r.exact = [qa = r.qa, qb = r.qb, a, b, omega, denom](double t) {
            Vec q(qa.size());
            for (std::size_t c = 0; c < q.size(); ++c)
                q[c] = (qa[c] * std::sin(omega * (b - t)) + qb[c] * std::sin(omega * (t - a))) / denom;
            return q;
        };
    }
    return r;
}

namespace detail {

inline Trajectory solve_cell(const ConvergenceSettings& cfg, const Problem& prob, const ReferenceProblem& ref,
                             int n) {
    const Grid g(cfg.a, cfg.b, n);
    if (cfg.scheme == "direct") {
        if (!ref.exact) throw DomainError("direct marching needs a problem with a closed-form solution");
        return march_direct_classical(prob.lagrangian, g, cfg.side, ref.qa, (*ref.exact)(g.node(1)), cfg.newton);
    }
    const auto kind = SchemeKind::parse(cfg.scheme, cfg.side, cfg.alpha);
    return solve_bvp_newton(BVPProblem{g, prob.lagrangian, kind, ref.qa, ref.qb}, cfg.newton).trajectory;
}

}  // namespace detail

/**
 * Max-norm nodal error per grid. Uses the closed-form solution when the
 * problem has one and the scheme is classical; otherwise compares against the
 * same scheme on a grid refined by reference_factor * max(N).
 * Cells run concurrently; rows come back sorted by N.
 */
inline std::vector<ConvergenceRow> convergence_study(const ConvergenceSettings& cfg) {
    if (cfg.intervals.empty()) throw DomainError("no grid sizes given");
    const bool fractional = cfg.scheme.rfind("fractional", 0) == 0;
    if (fractional && !cfg.alpha) throw DomainError("fractional schemes need --alpha");
    const auto ref = reference_problem(cfg.problem, cfg.omega, cfg.a, cfg.b, cfg.qa, cfg.qb, fractional);
    const Problem prob = make_problem(cfg.problem, static_cast<int>(ref.qa.size()), cfg.omega);

    std::vector<int> ns = cfg.intervals;
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

    std::optional<std::future<Trajectory>> fine;
    int n_ref = 0;
    if (!ref.exact) {
        n_ref = cfg.reference_factor * ns.back();
        for (int n : ns)
            if (n_ref % n != 0) throw DomainError("reference grid must refine every grid in the study");
        fine = std::async(std::launch::async, [&] { return detail::solve_cell(cfg, prob, ref, n_ref); });
    }
    std::vector<std::future<Trajectory>> cells;
    for (int n : ns) cells.push_back(std::async(std::launch::async, [&, n] { return detail::solve_cell(cfg, prob, ref, n); }));

    std::optional<Trajectory> reference;
    if (fine) reference = fine->get();

    std::vector<ConvergenceRow> rows;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const Trajectory q = cells[i].get();
        double err = 0.0;
        for (int k = 0; k <= ns[i]; ++k) {
            const Vec exact = reference ? Vec((*reference)[k * (n_ref / ns[i])].begin(),
                                              (*reference)[k * (n_ref / ns[i])].end())
                                        : (*ref.exact)(q.grid().node(k));
            for (int c = 0; c < q.dim(); ++c) err = std::max(err, std::abs(q(k, c) - exact[static_cast<std::size_t>(c)]));
        }
        rows.push_back({ns[i], q.grid().step(), err, std::nullopt});
    }
    for (auto& row : rows) {
        auto next = std::find_if(rows.begin(), rows.end(), [&](const ConvergenceRow& r) { return r.intervals == 2 * row.intervals; });
        if (next != rows.end() && row.error > 0.0 && next->error > 0.0)
            row.observed_order = std::log2(row.error / next->error);
    }
    return rows;
}

inline void write_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
    std::ostringstream buf;
    buf << std::setprecision(17) << "N,h,error,observed_order\n";
    for (const auto& r : rows) {
        buf << r.intervals << ',' << r.h << ',' << r.error << ',';
        if (r.observed_order) buf << *r.observed_order;
        buf << '\n';
    }
    os << buf.str();
}

// ---------------------------------------------------------------------------
// Grunwald-Letnikov versus the closed-form monomial derivative
// ---------------------------------------------------------------------------

struct GlCheckRow {
    int intervals;
    double h;
    double gl_value;
    double exact;
    double error;
    std::optional<double> observed_order;
};

/// (D^alpha_- sample((t-a)^beta))_N on [a, b] against the closed form at t = b.
inline std::vector<GlCheckRow> gl_check(double alpha, double beta, std::vector<int> ns, double a = 0.0, double b = 1.0) {
    if (ns.empty()) throw DomainError("no grid sizes given");
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    const double exact = rl_monomial_derivative(beta, alpha, b - a);
    std::vector<GlCheckRow> rows;
    for (int n : ns) {
        const Grid g(a, b, n);
        const auto q = sample_scalar([a, beta](double t) { return std::pow(t - a, beta); }, g);
        const double gl = delta_alpha_minus(q, alpha)(n, 0);
        rows.push_back({n, g.step(), gl, exact, std::abs(gl - exact), std::nullopt});
    }
    for (auto& row : rows) {
        auto next = std::find_if(rows.begin(), rows.end(), [&](const GlCheckRow& r) { return r.intervals == 2 * row.intervals; });
        if (next != rows.end() && row.error > 0.0 && next->error > 0.0)
            row.observed_order = std::log2(row.error / next->error);
    }
    return rows;
}

inline void write_csv(std::ostream& os, const std::vector<GlCheckRow>& rows) {
    std::ostringstream buf;
    buf << std::setprecision(17) << "N,h,gl_value,rl_value,error,observed_order\n";
    for (const auto& r : rows) {
        buf << r.intervals << ',' << r.h << ',' << r.gl_value << ',' << r.exact << ',' << r.error << ',';
        if (r.observed_order) buf << *r.observed_order;
        buf << '\n';
    }
    os << buf.str();
}

}  // namespace fracvi
