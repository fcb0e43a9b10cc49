#pragma once

// Command-line front end. run_cli() is separate from main() so tests can drive
// it with in-memory streams.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracvi/fracvi.hpp"

namespace fracvi::cli {

enum ExitCode : int { kPass = 0, kViolation = 1, kUsage = 2, kSolverFailure = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// `key = value` lines; `#` starts a comment. Keys may be written with or without leading dashes.
inline std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        key.erase(0, key.find_first_not_of('-'));
        if (key.empty()) throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
        kv.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return kv;
}

// Appends `--key value` for every config entry whose flag is absent from args.
inline std::vector<std::string> apply_config(std::vector<std::string> args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (!path) return args;
    auto given = [&](const std::string& flag) {
        return std::any_of(args.begin(), args.end(),
                           [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    std::vector<std::string> extra;
    for (const auto& [key, value] : read_config(*path)) {
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        if (value == "true") {
            extra.push_back(flag);
        } else if (value != "false") {
            extra.push_back(flag + "=" + value);
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

inline void emit(std::ostream& out, const std::optional<std::string>& path, const std::string& text) {
    out << text;
    if (path) {
        std::ofstream f(*path, std::ios::binary);
        if (!f) throw UsageError("cannot write " + *path);
        f << text;
    }
}

inline std::string fmt(double x, int digits = 6) {
    std::ostringstream os;
    os << std::setprecision(digits) << x;
    return os.str();
}

struct Common {
    double a = 0.0;
    double b = 1.0;
    int n = 0;
    std::string sigma;
    std::optional<double> alpha;
    std::string problem;
    double omega = 1.0;
    std::vector<double> qa, qb;
    std::uint64_t seed = 7;
    std::optional<std::string> out;
    std::string config;
    bool no_check = false;
};

inline void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--a", c.a, "Left endpoint");
    sub->add_option("--b", c.b, "Right endpoint");
    sub->add_option("--sigma", c.sigma, "Side: + or -");
    sub->add_option("--alpha", c.alpha, "Fractional order in (0, 1]");
    sub->add_option("--omega", c.omega, "Potential frequency");
    sub->add_option("--qa", c.qa, "Q_0, comma separated (sets the dimension)")->delimiter(',');
    sub->add_option("--qb", c.qb, "Q_N, comma separated")->delimiter(',');
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--out", c.out, "Also write the CSV output to this path");
    sub->add_option("--config", c.config, "key=value file; command-line flags win");
    sub->add_flag("--no-check", c.no_check, "Report only; always exit 0 on success");
}

/// out.csv -> out_diag.csv
inline std::string diagnostics_path(const std::string& out) {
    const std::string ext = ".csv";
    if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
        return out.substr(0, out.size() - ext.size()) + "_diag.csv";
    return out + "_diag.csv";
}

inline std::optional<Vec> opt_vec(const std::vector<double>& v) {
    return v.empty() ? std::nullopt : std::optional<Vec>(v);
}

inline std::vector<Side> sides_of(const std::string& sigma) {
    if (sigma.empty()) return {Side::minus, Side::plus};
    return {parse_side(sigma)};
}

// ---------------------------------------------------------------------------

inline int cmd_ibp(const Common& c, int trials, int dim, std::ostream& out) {
    IbpSettings cfg;
    cfg.seed = c.seed;
    cfg.trials = trials;
    cfg.intervals = c.n;
    cfg.dim = dim;
    cfg.a = c.a;
    cfg.b = c.b;
    std::vector<IbpSummary> rows{classical_ibp_trials(cfg)};
    if (c.alpha) {
        if (!(*c.alpha > 0.0 && *c.alpha <= 1.0)) throw UsageError("--alpha must lie in (0, 1]");
        if (c.n == 0) cfg.max_intervals = 128;
        rows.push_back(fractional_ibp_trials(cfg, *c.alpha));
    }
    std::ostringstream csv;
    csv << std::setprecision(17) << "case,trials,max_gap,max_rel_gap,tolerance,status\n";
    bool ok = true;
    for (const auto& r : rows) {
        csv << r.name << ',' << r.trials << ',' << r.max_gap << ',' << r.max_rel_gap << ',' << r.tolerance << ','
            << (r.passed() ? "PASS" : "FAIL") << '\n';
        ok = ok && r.passed();
    }
    emit(out, c.out, csv.str());
    return ok || c.no_check ? kPass : kViolation;
}

inline int cmd_coherence(const Common& c, std::ostream& out) {
    const int n = c.n > 0 ? c.n : 32;
    const std::string problem = c.problem.empty() ? "free" : c.problem;
    const int dim = c.qa.empty() ? 1 : static_cast<int>(c.qa.size());
    const Problem prob = make_problem(problem, dim, c.omega);
    const std::vector<double> alphas = c.alpha ? std::vector<double>{*c.alpha} : std::vector<double>{0.3, 0.5, 0.9};
    Rng rng(c.seed);

    std::ostringstream csv;
    csv << kCoherenceCsvHeader << '\n';
    bool ok = true;
    for (Side s : sides_of(c.sigma)) {
        // Symmetric classical embedding on the cubic witness with h = 1.
        const int m = std::max(n, 3);
        const Grid unit(0.0, m, m);
        const auto classical = coherence_report(prob.lagrangian, cubic_witness(unit, dim), s, CoherenceFamily::classical);
        ok = ok && !classical.coherent && classical.gap > 0.1;
        csv << csv_row(classical) << '\n';

        const Grid g(c.a, c.b, n);
        const auto asym = coherence_report(prob.lagrangian, random_trajectory(g, dim, rng), s, CoherenceFamily::asymmetric);
        ok = ok && asym.coherent;
        csv << csv_row(asym) << '\n';

        for (double alpha : alphas) {
            const auto frac = coherence_report(prob.lagrangian, random_trajectory(g, dim, rng), s,
                                               CoherenceFamily::fractional, alpha);
            ok = ok && frac.coherent;
            csv << csv_row(frac) << '\n';
        }
    }
    emit(out, c.out, csv.str());
    return ok || c.no_check ? kPass : kViolation;
}

struct OrderWindow {
    double lo;
    double hi;
};

inline OrderWindow order_window(const std::string& scheme) {
    if (scheme == "vi" || scheme == "asymmetric") return {1.8, 2.2};
    if (scheme == "direct") return {0.7, 1.3};
    return {0.7, INFINITY};
}

inline int cmd_convergence(const Common& c, const std::string& scheme, const std::vector<int>& ns, int ref_factor,
                           const NewtonConfig& newton, std::ostream& out, std::ostream& err) {
    ConvergenceSettings cfg;
    cfg.problem = c.problem.empty() ? "harmonic" : c.problem;
    cfg.omega = c.omega;
    cfg.a = c.a;
    cfg.b = c.b;
    cfg.scheme = scheme;
    cfg.side = c.sigma.empty() ? Side::minus : parse_side(c.sigma);
    cfg.alpha = c.alpha;
    if (scheme.rfind("fractional", 0) == 0 && !cfg.alpha) cfg.alpha = 0.5;
    if (!ns.empty()) cfg.intervals = ns;
    cfg.qa = opt_vec(c.qa);
    cfg.qb = opt_vec(c.qb);
    cfg.reference_factor = ref_factor;
    cfg.newton = newton;
    const auto rows = convergence_study(cfg);

    std::ostringstream csv;
    write_csv(csv, rows);
    emit(out, c.out, csv.str());

    bool ok = true;
    if (cfg.problem == "free") {
        for (const auto& r : rows) ok = ok && r.error <= 1e-10;
    } else {
        const auto w = order_window(scheme);
        for (const auto& r : rows)
            if (r.observed_order && !(*r.observed_order >= w.lo && *r.observed_order <= w.hi)) {
                err << "observed order " << fmt(*r.observed_order) << " at N=" << r.intervals << " outside ["
                    << w.lo << ", " << w.hi << "]\n";
                ok = false;
            }
    }
    return ok || c.no_check ? kPass : kViolation;
}

inline int cmd_solve(const Common& c, const std::string& scheme_name, const std::vector<double>& q1,
                     const std::optional<std::string>& diag_path, const NewtonConfig& newton, std::ostream& out,
                     std::ostream& err) {
    const int n = c.n > 0 ? c.n : 64;
    const std::string problem = c.problem.empty() ? "harmonic" : c.problem;
    const Side s = c.sigma.empty() ? Side::minus : parse_side(c.sigma);
    const bool fractional = scheme_name.rfind("fractional", 0) == 0;
    const auto ref = reference_problem(problem, c.omega, c.a, c.b, opt_vec(c.qa), opt_vec(c.qb), fractional);
    const Problem prob = make_problem(problem, static_cast<int>(ref.qa.size()), c.omega);
    const Grid g(c.a, c.b, n);

    Trajectory q = Trajectory::scalar(g, Vec(static_cast<std::size_t>(n) + 1, 0.0));
    double residual_norm = 0.0;
    NewtonDiagnostics diag;
    if (scheme_name == "direct") {
        Vec second = q1.empty() ? (ref.exact ? (*ref.exact)(g.node(1)) : Vec{}) : Vec(q1);
        if (second.size() != ref.qa.size()) throw UsageError("direct marching needs --q1 for this problem");
        q = march_direct_classical(prob.lagrangian, g, s, ref.qa, second, newton);
        residual_norm = inf_norm(residual_direct_classical(prob.lagrangian, q, s));
    } else {
        const auto kind = SchemeKind::parse(scheme_name, s, c.alpha);
        auto sol = solve_bvp_newton(BVPProblem{g, prob.lagrangian, kind, ref.qa, ref.qb}, newton);
        q = std::move(sol.trajectory);
        diag = std::move(sol.diagnostics);
        residual_norm = inf_norm(residual(kind, prob.lagrangian, q));
    }

    std::ostringstream csv;
    write_csv(csv, q);
    std::ostringstream summary;
    summary << std::setprecision(17) << "scheme=" << scheme_name << " N=" << n << " final residual norm: " << residual_norm;
    if (scheme_name != "direct")
        summary << " iterations: " << diag.iterations << (diag.stalled_at_roundoff ? " (stalled at roundoff)" : "");
    summary << '\n';

    if (c.out) {
        std::ofstream f(*c.out, std::ios::binary);
        if (!f) throw UsageError("cannot write " + *c.out);
        f << csv.str();
        out << summary.str();
    } else {
        out << csv.str();
        err << summary.str();
    }
    if (scheme_name != "direct") {
        std::optional<std::string> dpath = diag_path;
        if (!dpath && c.out) dpath = diagnostics_path(*c.out);
        if (dpath) {
            std::ofstream f(*dpath, std::ios::binary);
            if (!f) throw UsageError("cannot write " + *dpath);
            write_csv(f, diag);
        }
    }
    return kPass;
}

inline int cmd_glcheck(const Common& c, double beta, const std::vector<int>& ns, std::ostream& out, std::ostream& err) {
    const double alpha = c.alpha.value_or(0.5);
    const auto rows = gl_check(alpha, beta, ns.empty() ? std::vector<int>{64, 128, 256, 512} : ns, c.a, c.b);
    std::ostringstream csv;
    write_csv(csv, rows);
    emit(out, c.out, csv.str());

    bool ok = true;
    for (const auto& r : rows) {
        if (r.error <= 1e-12 * (1.0 + std::abs(r.exact))) continue;  // exact reduction cases
        if (r.observed_order && !(*r.observed_order >= 0.7 && *r.observed_order <= 1.3)) {
            err << "observed order " << fmt(*r.observed_order) << " at N=" << r.intervals << " outside [0.7, 1.3]\n";
            ok = false;
        }
    }
    return ok || c.no_check ? kPass : kViolation;
}

/// argv-style entry point without the program name.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Discrete variational and fractional embedding experiments", "fracvi"};
    app.require_subcommand(1);

    Common c;
    int trials = 100, dim = 0, ref_factor = 4;
    std::string scheme = "vi";
    std::vector<int> ns;
    std::vector<double> q1;
    double beta = 1.0;
    std::optional<std::string> diag_path;
    NewtonConfig newton;

    auto* ibp = app.add_subcommand("ibp", "Randomized summation-by-parts identity checks");
    add_common(ibp, c);
    ibp->add_option("--n", c.n, "Intervals (0: random in [2, 200])");
    ibp->add_option("--trials", trials, "Random pairs per case");
    ibp->add_option("--dim", dim, "Dimension (0: random in {1, 2, 3})");

    auto* coh = app.add_subcommand("coherence", "Direct embedding versus variational integrator");
    add_common(coh, c);
    coh->add_option("--n", c.n, "Intervals");
    coh->add_option("--problem", c.problem, "free, harmonic or pendulum");

    auto* conv = app.add_subcommand("convergence", "Observed order over a list of grids");
    add_common(conv, c);
    conv->add_option("--problem", c.problem, "free, harmonic or pendulum");
    conv->add_option("--scheme", scheme, "direct, vi, asymmetric, fractional-vi or fractional-direct");
    conv->add_option("--ns", ns, "Interval counts, comma separated")->delimiter(',');
    conv->add_option("--ref-factor", ref_factor, "Self-reference grid is this multiple of max(ns)");
    conv->add_option("--tol", newton.tol, "Newton residual tolerance");

    auto* solve = app.add_subcommand("solve", "Solve one boundary-value problem and export the trajectory");
    add_common(solve, c);
    solve->add_option("--n", c.n, "Intervals");
    solve->add_option("--problem", c.problem, "free, harmonic or pendulum");
    solve->add_option("--scheme", scheme, "direct, vi, asymmetric, fractional-vi or fractional-direct");
    solve->add_option("--q1", q1, "Q_1 for direct marching, comma separated")->delimiter(',');
    solve->add_option("--diag", diag_path, "Newton diagnostics CSV path");
    solve->add_option("--tol", newton.tol, "Newton residual tolerance");
    solve->add_option("--max-iter", newton.max_iter, "Newton iteration limit");

    auto* gl = app.add_subcommand("glcheck", "Grunwald-Letnikov sums against closed-form monomial derivatives");
    add_common(gl, c);
    gl->add_option("--beta", beta, "Monomial exponent");
    gl->add_option("--ns", ns, "Interval counts, comma separated")->delimiter(',');

    try {
        args = apply_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kPass : kUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*ibp) return cmd_ibp(c, trials, dim, out);
        if (*coh) return cmd_coherence(c, out);
        if (*conv) return cmd_convergence(c, scheme, ns, ref_factor, newton, out, err);
        if (*solve) return cmd_solve(c, scheme, q1, diag_path, newton, out, err);
        if (*gl) return cmd_glcheck(c, beta, ns, out, err);
    } catch (const ConvergenceError& e) {
        err << "solver failure: " << e.what() << " (residual " << fmt(e.diagnostics().final_residual()) << ")\n";
        return kSolverFailure;
    } catch (const SingularMatrixError& e) {
        err << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace fracvi::cli
