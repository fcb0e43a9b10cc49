#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <sstream>

#include "fracvi/solver.hpp"
#include "oracles.hpp"

using namespace fracvi;

namespace {

// Interior system of the quadratic fractional action, built from explicit matrices:
// V = M Q with M_kj = -sign(s) h^-alpha w_{|k-j|} on the operator's support, and
// R = M^T M Q + omega^2-term. Returns (A, rhs) for the interior unknowns.
std::pair<Matrix, Vec> fractional_harmonic_system(const Grid& g, Side s, double alpha, double omega, double qa,
                                                  double qb) {
    const int n = g.intervals();
    const double scale = -sign(s) / std::pow(g.step(), alpha);
    std::vector<std::vector<double>> m(static_cast<std::size_t>(n) + 1, std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
    const auto rows = side_range(g, s);
    for (int k = rows.first; k <= rows.last; ++k)
        for (int j = 0; j <= n; ++j) {
            const int r = s == Side::minus ? k - j : j - k;
            if (r >= 0) m[k][j] = scale * oracle::gl_weight_gamma(alpha, r);
        }
    Matrix a(n - 1, n - 1);
    Vec rhs(static_cast<std::size_t>(n - 1), 0.0);
    for (int i = 1; i < n; ++i) {
        for (int j = 0; j <= n; ++j) {
            double mtm = 0.0;
            for (int k = rows.first; k <= rows.last; ++k) mtm += m[k][i] * m[k][j];
            if (j == i) mtm -= omega * omega;
            if (j == 0) rhs[i - 1] -= mtm * qa;
            else if (j == n) rhs[i - 1] -= mtm * qb;
            else a(i - 1, j - 1) = mtm;
        }
    }
    return {a, rhs};
}

}  // namespace

TEST(NewtonConfig, Validation) {
    NewtonConfig c;
    EXPECT_NO_THROW(c.validate());
    c.damping = 1.0;
    EXPECT_THROW(c.validate(), DomainError);
    c = {};
    c.max_iter = 0;
    EXPECT_THROW(c.validate(), DomainError);
    c = {};
    c.tol = 0.0;
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(SolveBvp, FreeProblemIsLinear) {
    const auto l = make_problem("free").lagrangian;
    for (Side s : {Side::plus, Side::minus}) {
        const Grid g(0.0, 1.0, 10);
        const auto sol = solve_bvp_newton(BVPProblem{g, l, SchemeKind::variational_classical(s), {0.0}, {1.0}});
        for (int k = 0; k <= 10; ++k) EXPECT_NEAR(sol.trajectory(k, 0), k / 10.0, 1e-14);
        EXPECT_EQ(sol.diagnostics.iterations, 0);  // linear guess is already the solution
    }
}

TEST(SolveBvp, LinearSchemeMatchesLinearSolve) {
    std::mt19937_64 rng(21);
    const auto l = make_problem("harmonic", 1, 1.5).lagrangian;
    const Grid g(0.0, 1.0, 12);
    const auto init = [&] {
        auto q = oracle::random_trajectory(g, 1, rng);
        Vec v(q.flat().begin(), q.flat().end());
        v.front() = 0.3;
        v.back() = -0.7;
        return Trajectory(g, 1, v);
    }();
    const auto sol = solve_bvp_newton(BVPProblem{g, l, SchemeKind::variational_classical(Side::minus), {0.3}, {-0.7}}, init);
    EXPECT_LE(sol.diagnostics.iterations, 2);
    EXPECT_TRUE(sol.diagnostics.converged);

    // Tridiagonal system (2 Q_k - Q_{k-1} - Q_{k+1})/h^2 - w^2 Q_k = 0.
    const double h = g.step(), w2 = 2.25;
    Matrix a(11, 11);
    Vec b(11, 0.0);
    for (int i = 0; i < 11; ++i) {
        a(i, i) = 2.0 / (h * h) - w2;
        if (i > 0) a(i, i - 1) = -1.0 / (h * h);
        if (i < 10) a(i, i + 1) = -1.0 / (h * h);
    }
    b[0] = 0.3 / (h * h);
    b[10] = -0.7 / (h * h);
    const auto x = lu_solve(a, b);
    for (int k = 1; k < 12; ++k) EXPECT_NEAR(sol.trajectory(k, 0), x[k - 1], 1e-10);
}

TEST(SolveBvp, FractionalLinearOracle) {
    for (Side s : {Side::minus, Side::plus}) {
        const Grid g(0.0, 1.0, 8);
        const auto l = make_problem("harmonic").lagrangian;
        const auto sol = solve_bvp_newton(BVPProblem{g, l, SchemeKind::variational_fractional(s, 0.5), {0.0}, {1.0}});
        auto [a, rhs] = fractional_harmonic_system(g, s, 0.5, 1.0, 0.0, 1.0);
        const auto x = lu_solve(a, rhs);
        for (int k = 1; k < 8; ++k) EXPECT_NEAR(sol.trajectory(k, 0), x[k - 1], 1e-10) << to_string(s);
        EXPECT_LE(sol.diagnostics.iterations, 2);
    }
}

TEST(SolveBvp, EndpointsAreBitExact) {
    const auto l = make_problem("pendulum", 2).lagrangian;
    const Grid g(0.0, 2.0, 16);
    const Vec qa{0.1 + 0.2, -1.0 / 3.0}, qb{std::sqrt(2.0), 1e-300};
    for (const auto& kind : {SchemeKind::variational_classical(Side::plus), SchemeKind::asymmetric_direct(Side::minus),
                             SchemeKind::variational_fractional(Side::minus, 0.7),
                             SchemeKind::direct_fractional(Side::plus, 0.6)}) {
        const auto sol = solve_bvp_newton(BVPProblem{g, l, kind, qa, qb});
        EXPECT_EQ(oracle::to_vec(sol.trajectory[0]), qa);
        EXPECT_EQ(oracle::to_vec(sol.trajectory[16]), qb);
        EXPECT_LE(inf_norm(residual(kind, l, sol.trajectory)), 1e-9);
    }
}

TEST(SolveBvp, HarmonicSecondOrder) {
    const auto l = make_problem("harmonic").lagrangian;
    const double qb = std::cos(1.0) + 0.5 * std::sin(1.0);
    double prev = 0.0;
    for (int n : {16, 32, 64, 128}) {
        const Grid g(0.0, 1.0, n);
        const auto sol = solve_bvp_newton(BVPProblem{g, l, SchemeKind::variational_classical(Side::minus), {1.0}, {qb}});
        EXPECT_TRUE(sol.diagnostics.converged);
        double err = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double t = g.node(k);
            err = std::max(err, std::abs(sol.trajectory(k, 0) - (std::cos(t) + 0.5 * std::sin(t))));
        }
        if (prev > 0.0) EXPECT_NEAR(std::log2(prev / err), 2.0, 0.2) << n;
        prev = err;
    }
}

TEST(SolveBvp, RejectsBadInitialGuess) {
    const auto l = make_problem("free").lagrangian;
    const Grid g(0.0, 1.0, 4);
    const BVPProblem p{g, l, SchemeKind::variational_classical(Side::minus), {0.0}, {1.0}};
    EXPECT_THROW(solve_bvp_newton(p, Trajectory::scalar(g, {0.1, 0, 0, 0, 1})), DomainError);
    EXPECT_THROW(solve_bvp_newton(p, Trajectory::scalar(Grid(0.0, 1.0, 5), Vec(6, 0.0))), DomainError);
    EXPECT_THROW(solve_bvp_newton(BVPProblem{g, l, p.scheme, {0.0, 1.0}, {1.0, 1.0}}), DomainError);
}

TEST(SolveBvp, NonConvergenceReportsLastIterate) {
    const auto l = make_problem("pendulum", 1, 3.0).lagrangian;
    const Grid g(0.0, 1.0, 8);
    NewtonConfig cfg;
    cfg.max_iter = 1;
    try {
        solve_bvp_newton(BVPProblem{g, l, SchemeKind::variational_classical(Side::minus), {0.0}, {3.0}}, cfg);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.last_iterate().size(), 9u);
        EXPECT_EQ(e.last_iterate().front(), 0.0);
        EXPECT_EQ(e.last_iterate().back(), 3.0);
        EXPECT_GE(e.diagnostics().history.size(), 1u);
        EXPECT_FALSE(e.diagnostics().converged);
    }
}

TEST(SolveBvp, SingularJacobian) {
    Lagrangian l;
    l.dim = 1;
    l.value = [](ConstVec x, ConstVec, double) { return x[0]; };
    l.dx = [](ConstVec, ConstVec, double) { return Vec{1.0}; };
    l.dv = [](ConstVec, ConstVec, double) { return Vec{0.0}; };
    const Grid g(0.0, 1.0, 4);
    EXPECT_THROW(solve_bvp_newton(BVPProblem{g, l, SchemeKind::variational_classical(Side::plus), {0.0}, {0.0}}),
                 SingularMatrixError);
}

TEST(SolveBvp, DiagnosticsCsv) {
    const auto l = make_problem("pendulum").lagrangian;
    const Grid g(0.0, 1.0, 8);
    const auto sol = solve_bvp_newton(BVPProblem{g, l, SchemeKind::variational_classical(Side::minus), {0.0}, {1.0}});
    std::ostringstream os;
    write_csv(os, sol.diagnostics);
    EXPECT_EQ(os.str().rfind("iter,residual_norm,step_norm\n0,", 0), 0u);
    EXPECT_EQ(sol.diagnostics.history.size(), static_cast<std::size_t>(sol.diagnostics.iterations) + 1);
    for (std::size_t i = 1; i < sol.diagnostics.history.size(); ++i)
        EXPECT_LT(sol.diagnostics.history[i].residual_norm, sol.diagnostics.history[i - 1].residual_norm);
}

TEST(SolveBvp, FineGridStallsAtRoundoffFloor) {
    // At N = 512 the residual floor eps*|Q|/h^2 sits above 1e-12.
    const auto l = make_problem("harmonic").lagrangian;
    const Grid g(0.0, 1.0, 512);
    const auto sol = solve_bvp_newton(BVPProblem{g, l, SchemeKind::variational_classical(Side::minus), {1.0}, {0.5}});
    EXPECT_TRUE(sol.diagnostics.converged);
    EXPECT_LE(sol.diagnostics.final_residual(), 1e-8);
}

TEST(SolveBvp, FractionalPerformanceBudget) {
    const auto l = make_problem("harmonic").lagrangian;
    const Grid g(0.0, 1.0, 256);
    const auto start = std::chrono::steady_clock::now();
    const auto sol = solve_bvp_newton(BVPProblem{g, l, SchemeKind::variational_fractional(Side::minus, 0.5), {0.0}, {1.0}});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_TRUE(sol.diagnostics.converged);
    EXPECT_LT(secs, 30.0);
}

TEST(March, FreeIsLinearExtrapolation) {
    const auto l = make_problem("free", 2).lagrangian;
    const Grid g(0.0, 1.0, 10);
    const auto q = march_direct_classical(l, g, Side::minus, {1.0, 0.0}, {1.5, -0.25});
    for (int k = 0; k <= 10; ++k) {
        EXPECT_NEAR(q(k, 0), 1.0 + 0.5 * k, 1e-12);
        EXPECT_NEAR(q(k, 1), -0.25 * k, 1e-12);
    }
}

TEST(March, ZeroIsFixedPoint) {
    const auto l = make_problem("pendulum").lagrangian;
    const auto q = march_direct_classical(l, Grid(0.0, 1.0, 20), Side::minus, {0.0}, {0.0});
    EXPECT_EQ(inf_norm(q), 0.0);
}

TEST(March, SatisfiesDirectResidual) {
    const auto l = make_problem("pendulum", 1, 2.0).lagrangian;
    const Grid g(0.0, 1.0, 40);
    const auto q = march_direct_classical(l, g, Side::minus, {0.5}, {0.52});
    EXPECT_LE(inf_norm(residual_direct_classical(l, q, Side::minus)), 1e-9);
}

TEST(March, HarmonicFirstOrder) {
    const auto l = make_problem("harmonic").lagrangian;
    double prev = 0.0;
    for (int n : {32, 64, 128, 256}) {
        const Grid g(0.0, 1.0, n);
        const auto q = march_direct_classical(l, g, Side::minus, {1.0}, {std::cos(g.node(1))});
        double err = 0.0;
        for (int k = 0; k <= n; ++k) err = std::max(err, std::abs(q(k, 0) - std::cos(g.node(k))));
        if (prev > 0.0) {
            EXPECT_GT(std::log2(prev / err), 0.7);
            EXPECT_LT(std::log2(prev / err), 1.3);
        }
        prev = err;
    }
}

TEST(March, Errors) {
    const auto l = make_problem("free").lagrangian;
    const Grid g(0.0, 1.0, 4);
    EXPECT_THROW(march_direct_classical(l, g, Side::plus, {0.0}, {0.0}), DomainError);
    EXPECT_THROW(march_direct_classical(l, g, Side::minus, {0.0, 1.0}, {0.0}), DomainError);
}
