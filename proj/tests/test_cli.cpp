#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "nlmod/commands.hpp"

using namespace nlmod;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(NLMOD_CLI_PATH) + " " + args + " 2>/dev/null";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> data_lines(const std::string& csv) {
    std::vector<std::string> lines;
    std::istringstream is(csv);
    for (std::string line; std::getline(is, line);)
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    return lines;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    return out;
}

}  // namespace

TEST(Csv, RealFormatting) {
    EXPECT_EQ(csv::real(0.5), "5.000000000e-01");
    EXPECT_EQ(csv::real(-0.0), "0.000000000e+00");
    EXPECT_EQ(csv::real(1.0 / 0.0), "inf");
    EXPECT_EQ(csv::real(std::nan("")), "nan");
    EXPECT_EQ(csv::real(12345.678), "1.234567800e+04");
}

TEST(CmdExponents, TightRowsInTheoremRange) {
    std::ostringstream os;
    cmd::exponents(os, {{0.05, 0.10, 0.15}, 1e4, 2.0, {}});
    const auto lines = data_lines(os.str());
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "lambda,w,rate_converse,rate_achievable,E_U,E_L,gap,tight");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split(lines[i]);
        ASSERT_EQ(cells.size(), 8u);
        EXPECT_EQ(cells[7], "1") << lines[i];
    }
}

TEST(CmdExponents, GapAtLambdaOne) {
    std::ostringstream os;
    cmd::exponents(os, {{1.0}, 1e4, 2.0, {}});
    const auto cells = split(data_lines(os.str())[1]);
    EXPECT_GT(std::stod(cells[6]), 0.0);
    EXPECT_EQ(cells[7], "0");
    // gap = alpha/2 ln(E_P^{-1}(1) / (1 + w(1))) = ln(8 / (1 + w(1)))
    EXPECT_NEAR(std::stod(cells[6]), std::log(8.0 / (1.0 + solve_w(1.0))), 1e-9);
}

TEST(CmdExponents, EmptyGridIsHeaderOnly) {
    std::ostringstream os;
    cmd::exponents(os, {{}, 1e4, 2.0, {}});
    EXPECT_EQ(data_lines(os.str()).size(), 1u);
}

TEST(CmdExponents, GoldenOutput) {
    std::ostringstream os;
    cmd::exponents(os, {{0.1, 1.0}, 100.0, 1.0, {}});
    const std::string want =
        "# nlmod exponents\n"
        "# units=nats\n"
        "# lambda=1.000000000e-01;1.000000000e+00\n"
        "# gamma=1.000000000e+02\n"
        "# alpha=1.000000000e+00\n"
        "lambda,w,rate_converse,rate_achievable,E_U,E_L,gap,tight\n";
    EXPECT_EQ(os.str().substr(0, want.size()), want);
    const auto rows = data_lines(os.str());
    ASSERT_EQ(rows.size(), 3u);
    // w(0.1) = 0.7722498296092303; R = 0.5 ln(100 / 1.77224983)
    EXPECT_EQ(split(rows[1])[1], "7.722498296e-01");
    EXPECT_EQ(split(rows[1])[2], fmt::format("{:.9e}", 0.5 * std::log(100.0 / (1.0 + 0.7722498296092303))));
}

TEST(CmdExponents, BitsConvertsExponentColumns) {
    std::ostringstream nats, bits;
    cmd::exponents(nats, {{0.3}, 1e3, 2.0, {false}});
    cmd::exponents(bits, {{0.3}, 1e3, 2.0, {true}});
    const auto a = split(data_lines(nats.str())[1]);
    const auto b = split(data_lines(bits.str())[1]);
    EXPECT_EQ(a[0], b[0]);
    EXPECT_EQ(a[1], b[1]);
    EXPECT_NEAR(std::stod(b[4]), std::stod(a[4]) / std::log(2.0), 1e-8);
}

TEST(CmdTradeoff, DenseCurves) {
    std::ostringstream os;
    cmd::tradeoff(os, {{1e2, 1e4}, 0.01, 1.0, 50, 2.0, {}});
    const auto lines = data_lines(os.str());
    ASSERT_EQ(lines.size(), 1u + 100u);
    EXPECT_EQ(lines[0], "gamma,lambda,E_U,E_L,upper_flagged,lower_flagged");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto c = split(lines[i]);
        EXPECT_GE(std::stod(c[2]) + 1e-9, std::stod(c[3]));
    }
}

TEST(CmdSimulate, ZnRowNearClosedForm) {
    cmd::SimulateArgs a;
    a.cfg.n = 8;
    a.cfg.power = 1.0;
    a.cfg.trials = 20000;
    a.cfg.u_grid = 1;
    a.cfg.bin_edges = false;
    a.m = 16;
    a.rule = DecodeRule::FullLattice;
    const auto probe = build_codebook(LatticeDef::zn(8), 8, 1.0, 16);
    a.cfg.sigma = probe.scale() / 5.0;
    std::ostringstream os;
    const auto r = cmd::simulate(os, a);
    const double exact = voronoi_escape_prob_zn(probe.scale(), a.cfg.sigma, 8);
    EXPECT_NEAR(r.p_out, exact, 3.0 * r.stderr_p);
    const auto lines = data_lines(os.str());
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0], cmd::sim_header);
    EXPECT_EQ(split(lines[1]).size(), 11u);
}

TEST(CmdSimulate, InfeasibleRate) {
    cmd::SimulateArgs a;
    a.cfg.lambda = 1.0;
    a.cfg.sigma = 1.0;  // gamma = 1: achievable rate negative
    std::ostringstream os;
    EXPECT_THROW(cmd::simulate(os, a), InfeasibleError);
}

TEST(CmdSweep, HeaderAndRows) {
    cmd::SweepArgs a;
    a.ns = {8, 16};
    a.lambdas = {0.1};
    a.gammas = {100.0};
    a.mode = SweepMode::ExactSphere;
    a.cfg.outage = OutageKind::sphere(0.0);
    std::ostringstream os;
    cmd::sweep(os, a);
    const auto lines = data_lines(os.str());
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "n,lambda,gamma,alpha,p_out,stderr,emp_outage_exp,worst_cost,emp_cost_exp,E_U,E_L");
}

TEST(CmdLatticeInfo, CodebookExport) {
    std::ostringstream os;
    cmd::lattice_info(os, {LatticeKind::ZN, 1, 1.0, 1.0, 3});
    const auto lines = data_lines(os.str());
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "index,x0");
    EXPECT_EQ(lines[2], "1,-1");
}

TEST(CmdLatticeInfo, GeneratorAndKissingNumber) {
    std::ostringstream os;
    cmd::lattice_info(os, {LatticeKind::E8, 8, 1.0, 1.0, std::nullopt});
    EXPECT_NE(os.str().find("# minimal_vectors=240\n"), std::string::npos);
    EXPECT_EQ(data_lines(os.str()).size(), 9u);
}

TEST(Binary, ExitCodes) {
    EXPECT_EQ(run_cli("exponents --lambda 0.1 --gamma 100").code, 0);
    EXPECT_EQ(run_cli("simulate --trials 0").code, 2);
    EXPECT_EQ(run_cli("bogus").code, 2);
    EXPECT_EQ(run_cli("simulate --lattice q").code, 2);
    EXPECT_EQ(run_cli("simulate --n 8 --lambda 1 --sigma 1 --trials 10").code, 3);
    EXPECT_EQ(run_cli("simulate --lattice e8 --n 7 --M 8 --trials 10").code, 2);
    EXPECT_EQ(run_cli("lattice-info --lattice z --n 8 --M 5000000").code, 3);
}

TEST(Binary, DeterministicBytes) {
    const std::string args =
        "simulate --lattice z --n 8 --M 16 --sigma 0.05 --trials 3000 --seed 9 --tilt 1.3 --u-grid 3";
    const auto a = run_cli(args);
    const auto b = run_cli(args);
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("# seed=9\n"), std::string::npos);
}

TEST(Binary, ConfigFileWithFlagOverride) {
    const std::string path = ::testing::TempDir() + "nlmod_cfg.ini";
    {
        std::ofstream f(path);
        f << "# sample\nlambda=0.1,0.2\ngamma=500\nalpha=1\n";
    }
    const auto from_file = run_cli("exponents --config " + path);
    ASSERT_EQ(from_file.code, 0);
    EXPECT_NE(from_file.out.find("# gamma=5.000000000e+02"), std::string::npos);
    EXPECT_EQ(data_lines(from_file.out).size(), 3u);
    const auto overridden = run_cli("exponents --config " + path + " --gamma 700");
    EXPECT_NE(overridden.out.find("# gamma=7.000000000e+02"), std::string::npos);
}

TEST(Binary, OutFile) {
    const std::string path = ::testing::TempDir() + "nlmod_out.csv";
    ASSERT_EQ(run_cli("tradeoff --gamma 100 --points 5 --out " + path).code, 0);
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    EXPECT_EQ(data_lines(ss.str()).size(), 6u);
}
