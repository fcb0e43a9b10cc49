#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = fracvi::cli::run_cli(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("fracvi_test_" + name);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, IbpClassical) {
    const auto r = run({"ibp", "--n", "64", "--trials", "100", "--seed", "7"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("classical,100,"), std::string::npos);
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Cli, IbpFractionalAndDeterminism) {
    const auto a = run({"ibp", "--alpha", "0.5", "--n", "64", "--trials", "20"});
    const auto b = run({"ibp", "--alpha", "0.5", "--n", "64", "--trials", "20"});
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("fractional(alpha=0.5)"), std::string::npos);
    EXPECT_EQ(run({"ibp", "--alpha", "1.0", "--n", "16"}).code, 0);
    EXPECT_EQ(run({"ibp", "--alpha", "1.5"}).code, 2);
}

TEST(Cli, CoherenceWitnessRow) {
    const auto r = run({"coherence", "--n", "4", "--sigma", "-", "--alpha", "0.5"});
    EXPECT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string header, classical, asym, frac;
    std::getline(lines, header);
    std::getline(lines, classical);
    std::getline(lines, asym);
    std::getline(lines, frac);
    EXPECT_EQ(header, "scheme,sigma,alpha,N,gap,verdict");
    EXPECT_EQ(classical, "classical,-,,4,6,NOT COHERENT");
    EXPECT_EQ(asym.rfind("asymmetric,-,,4,", 0), 0u);
    EXPECT_NE(asym.find(",COHERENT"), std::string::npos);
    EXPECT_EQ(frac.rfind("fractional,-,0.5,4,", 0), 0u);
    EXPECT_NE(frac.find(",COHERENT"), std::string::npos);
}

TEST(Cli, CoherenceBothSidesDefaultAlphas) {
    const auto r = run({"coherence", "--problem", "harmonic", "--n", "32"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 2 * 5);
}

TEST(Cli, ConvergenceWindows) {
    const auto vi = run({"convergence", "--problem", "harmonic", "--scheme", "vi", "--ns", "16,32,64,128"});
    EXPECT_EQ(vi.code, 0) << vi.err;
    EXPECT_EQ(vi.out.rfind("N,h,error,observed_order\n16,0.0625,", 0), 0u);
    EXPECT_EQ(run({"convergence", "--scheme", "direct"}).code, 0);
    // Below alpha = 1/2 the fractional self-convergence order stays under the 0.7 floor.
    const auto frac = run({"convergence", "--scheme", "fractional-vi", "--alpha", "0.3", "--ns", "16,32"});
    EXPECT_EQ(frac.code, 1);
    EXPECT_NE(frac.err.find("outside"), std::string::npos);
    EXPECT_EQ(run({"convergence", "--scheme", "fractional-vi", "--alpha", "0.3", "--ns", "16,32", "--no-check"}).code, 0);
}

TEST(Cli, SolveWritesTrajectoryAndDiagnostics) {
    const auto out = temp_path("solve.csv");
    const auto r = run({"solve", "--problem", "free", "--scheme", "vi", "--n", "8", "--qa", "0,1", "--qb", "1,-1",
                        "--out", out.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("final residual norm"), std::string::npos);
    const auto csv = slurp(out);
    EXPECT_EQ(csv.rfind("k,t,q0,q1\n0,0,0,1\n1,0.125,0.125,0.75\n", 0), 0u) << csv;
    EXPECT_EQ(slurp(temp_path("solve_diag.csv")).rfind("iter,residual_norm,step_norm\n", 0), 0u);
    std::filesystem::remove(out);
    std::filesystem::remove(temp_path("solve_diag.csv"));
}

TEST(Cli, SolveHarmonicAndFractional) {
    const auto h = run({"solve", "--problem", "harmonic", "--n", "64"});
    EXPECT_EQ(h.code, 0) << h.err;
    const auto f = run({"solve", "--problem", "harmonic", "--scheme", "fractional-vi", "--alpha", "0.5", "--n", "64"});
    EXPECT_EQ(f.code, 0) << f.err;
    const auto d = run({"solve", "--problem", "pendulum", "--scheme", "direct", "--n", "16", "--q1", "0.05"});
    EXPECT_EQ(d.code, 0) << d.err;
}

TEST(Cli, SolveFailureExitCode) {
    const auto r = run({"solve", "--problem", "pendulum", "--omega", "3", "--qb", "3", "--n", "8", "--max-iter", "1"});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("solver failure"), std::string::npos);
}

TEST(Cli, GlCheck) {
    const auto r = run({"glcheck", "--alpha", "0.5", "--beta", "1", "--ns", "64,128,256,512"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("N,h,gl_value,rl_value,error,observed_order\n", 0), 0u);
    EXPECT_EQ(run({"glcheck", "--alpha", "1", "--beta", "1"}).code, 0);
    EXPECT_EQ(run({"glcheck", "--alpha", "0.3", "--beta", "2"}).code, 0);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"solve", "--scheme", "bogus"}).code, 2);
    EXPECT_EQ(run({"solve", "--sigma", "x"}).code, 2);
    EXPECT_EQ(run({"ibp", "--n", "abc"}).code, 2);
    EXPECT_EQ(run({"solve", "--problem", "pendulum", "--scheme", "direct"}).code, 2);
    EXPECT_EQ(run({"ibp", "--help"}).code, 0);
}

TEST(Cli, ConfigFileFlagsOverride) {
    const auto cfg = temp_path("config.txt");
    std::ofstream(cfg) << "# experiment\nn = 4\nsigma=-\n--alpha = 0.5\nno-check = true\n";
    const auto r = run({"coherence", "--config", cfg.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("classical,-,,4,6,NOT COHERENT"), std::string::npos);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);
    const auto o = run({"coherence", "--config", cfg.string(), "--n", "5"});
    EXPECT_NE(o.out.find("classical,-,,5,"), std::string::npos);
    std::ofstream(cfg) << "broken line\n";
    EXPECT_EQ(run({"coherence", "--config", cfg.string()}).code, 2);
    EXPECT_EQ(run({"coherence", "--config", "/nonexistent/fracvi.cfg"}).code, 2);
    std::filesystem::remove(cfg);
}
