#pragma once

// CSV-emitting experiment commands behind the nlmod command-line tool. Each
// command writes its resolved parameters as "# key=value" lines before the
// CSV header so that a run can be reproduced from its own output.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "nlmod/csv.hpp"
#include "nlmod/error.hpp"
#include "nlmod/exponents.hpp"
#include "nlmod/lattice.hpp"
#include "nlmod/scheme.hpp"
#include "nlmod/sim.hpp"

namespace nlmod::cmd {

/// Converts nats to the output unit (bits when requested).
struct Units {
    bool bits = false;
    double operator()(double nats) const { return bits ? nats / std::numbers::ln2 : nats; }
    std::string name() const { return bits ? "bits" : "nats"; }
};

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + csv::real(v[i]);
    return s;
}

inline std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
    return s;
}

inline constexpr double kTightGap = 1e-10;

struct ExponentsArgs {
    std::vector<double> lambdas;
    double gamma = 1e4;
    double alpha = 2.0;
    Units units;
};

/// Rows (lambda, w, rate_converse, rate_achievable, E_U, E_L, gap, tight).
inline void exponents(std::ostream& os, const ExponentsArgs& a) {
    os << "# nlmod exponents\n";
    csv::comment(os, "units", a.units.name());
    csv::comment(os, "lambda", join(a.lambdas));
    csv::comment(os, "gamma", csv::real(a.gamma));
    csv::comment(os, "alpha", csv::real(a.alpha));
    os << "lambda,w,rate_converse,rate_achievable,E_U,E_L,gap,tight\n";
    for (double lambda : a.lambdas) {
        const auto pt = curve_point({lambda, a.gamma, a.alpha});
        const double gap = pt.e_upper - pt.e_lower;
        const bool tight = lambda <= kTightLambdaMax && std::fabs(gap) <= kTightGap;
        csv::row(os, {csv::real(lambda), csv::real(pt.w), csv::real(a.units(pt.rate_converse)),
                      csv::real(a.units(pt.rate_achievable)), csv::real(a.units(pt.e_upper)),
                      csv::real(a.units(pt.e_lower)), csv::real(a.units(gap)), tight ? "1" : "0"});
    }
}

struct TradeoffArgs {
    std::vector<double> gammas;
    double lambda_min = 0.01;
    double lambda_max = 2.0;
    int points = 200;
    double alpha = 2.0;
    Units units;
};

/// Dense E_U / E_L curves over a uniform lambda grid, one block per gamma.
inline void tradeoff(std::ostream& os, const TradeoffArgs& a) {
    if (a.points < 1) throw DomainError("tradeoff: points must be >= 1");
    if (!(a.lambda_min > 0.0) || !(a.lambda_max >= a.lambda_min))
        throw DomainError("tradeoff: need 0 < lambda_min <= lambda_max");
    os << "# nlmod tradeoff\n";
    csv::comment(os, "units", a.units.name());
    csv::comment(os, "gamma", join(a.gammas));
    csv::comment(os, "lambda_min", csv::real(a.lambda_min));
    csv::comment(os, "lambda_max", csv::real(a.lambda_max));
    csv::comment(os, "points", std::to_string(a.points));
    csv::comment(os, "alpha", csv::real(a.alpha));
    os << "gamma,lambda,E_U,E_L,upper_flagged,lower_flagged\n";
    for (double gamma : a.gammas)
        for (int k = 0; k < a.points; ++k) {
            const double lambda =
                a.points == 1 ? a.lambda_min
                              : a.lambda_min + (a.lambda_max - a.lambda_min) * k / static_cast<double>(a.points - 1);
            const auto pt = curve_point({lambda, gamma, a.alpha});
            csv::row(os, {csv::real(gamma), csv::real(lambda), csv::real(a.units(pt.e_upper)),
                          csv::real(a.units(pt.e_lower)), pt.upper_flagged ? "1" : "0", pt.lower_flagged ? "1" : "0"});
        }
}

inline LatticeKind parse_lattice(const std::string& s) {
    if (s == "z") return LatticeKind::ZN;
    if (s == "d") return LatticeKind::DN;
    if (s == "e8") return LatticeKind::E8;
    throw DomainError("unknown lattice '" + s + "' (expected z, d or e8)");
}

inline std::string lattice_flag(LatticeKind k) {
    switch (k) {
        case LatticeKind::ZN: return "z";
        case LatticeKind::DN: return "d";
        case LatticeKind::E8: return "e8";
    }
    return "?";
}

inline const char* sim_header = "n,lambda,gamma,alpha,p_out,stderr,emp_outage_exp,worst_cost,emp_cost_exp,E_U,E_L";

struct SimulateArgs {
    SimConfig cfg;
    LatticeKind lattice = LatticeKind::ZN;
    std::optional<std::size_t> m;
    std::optional<double> rate;
    std::optional<double> theta;
    bool pairing = false;
    DecodeRule rule = DecodeRule::Codebook;
    bool plain = false;  ///< plain Monte Carlo even if a tilt is set
    Units units;
};

/// Number of bins implied by --M, --rate, or the achievable rate at (lambda, gamma).
inline std::size_t resolve_bins(const SimulateArgs& a, std::size_t cap) {
    if (a.m) return *a.m;
    const double rate = a.rate ? *a.rate : rate_achievable({a.cfg.lambda, a.cfg.gamma(), a.cfg.alpha});
    if (!(rate > 0.0)) throw InfeasibleError(fmt::format("rate {} is not positive; no codebook to build", rate));
    const double m = std::ceil(std::exp(a.cfg.n * rate));
    if (!(m <= static_cast<double>(cap))) throw InfeasibleError(fmt::format("M = {:.4g} exceeds the cap", m));
    return std::max<std::size_t>(2, static_cast<std::size_t>(m));
}

/// Builds the scheme from the arguments, runs one simulation, writes one row and a summary comment.
inline SimResult simulate(std::ostream& os, SimulateArgs a, std::size_t cap = kDefaultEnumerationCap) {
    a.cfg.validate();
    if (a.cfg.outage.type == OutageKind::Type::SphereRadius)
        a.cfg.outage.theta = a.theta ? *a.theta : solve_w(a.cfg.lambda);
    const std::size_t bins = resolve_bins(a, cap);
    const auto lat = LatticeDef::make(a.lattice, a.cfg.n);
    const auto scheme = make_scheme(lat, a.cfg.n, a.cfg.power, bins, a.pairing, a.cfg.outage, a.rule, cap);
    const SimResult r = a.plain ? run_plain_mc(a.cfg, scheme) : run_importance_sampled(a.cfg, scheme);
    const auto pt = curve_point({a.cfg.lambda, a.cfg.gamma(), a.cfg.alpha});

    os << "# nlmod simulate\n";
    csv::comment(os, "units", a.units.name());
    csv::comment(os, "lattice", lattice_flag(a.lattice));
    csv::comment(os, "n", std::to_string(a.cfg.n));
    csv::comment(os, "P", csv::real(a.cfg.power));
    csv::comment(os, "sigma", csv::real(a.cfg.sigma));
    csv::comment(os, "lambda", csv::real(a.cfg.lambda));
    csv::comment(os, "alpha", csv::real(a.cfg.alpha));
    csv::comment(os, "M", std::to_string(bins));
    csv::comment(os, "codewords", std::to_string(scheme.codebook().size()));
    csv::comment(os, "scale", csv::real(scheme.codebook().scale()));
    csv::comment(os, "trials", std::to_string(a.cfg.trials));
    csv::comment(os, "seed", std::to_string(a.cfg.seed));
    csv::comment(os, "tilt", a.plain ? "plain" : csv::real(a.cfg.tilt.value_or(1.0)));
    csv::comment(os, "outage", a.cfg.outage.type == OutageKind::Type::SphereRadius
                                   ? "sphere(theta=" + csv::real(a.cfg.outage.theta) + ")"
                                   : "decode");
    csv::comment(os, "decode", a.rule == DecodeRule::FullLattice ? "lattice" : "codebook");
    csv::comment(os, "pairing", a.pairing ? "1" : "0");
    csv::comment(os, "u_grid", std::to_string(a.cfg.u_grid));
    csv::comment(os, "bin_edges", a.cfg.bin_edges ? "1" : "0");
    os << sim_header << '\n';
    csv::row(os, {std::to_string(a.cfg.n), csv::real(a.cfg.lambda), csv::real(a.cfg.gamma()), csv::real(a.cfg.alpha),
                  csv::real(r.p_out), csv::real(r.stderr_p), csv::real(a.units(r.emp_outage_exp)),
                  csv::real(r.worst_cost), csv::real(a.units(r.emp_cost_exp)), csv::real(a.units(pt.e_upper)),
                  csv::real(a.units(pt.e_lower))});
    os << "# summary: p_out=" << csv::real(r.p_out) << " ci95=[" << csv::real(r.ci_lo) << ","
       << csv::real(r.ci_hi) << "] ess=" << csv::real(r.trials_effective) << " hits=" << r.outage_hits
       << " worst_u=" << csv::real(r.worst_u) << " grid=" << r.grid_points;
    if (r.degenerate_ci) os << " [degenerate-ci]";
    if (r.cost_undefined) os << " [cost-undefined]";
    if (r.no_hits) os << " [no-outage-observed]";
    os << '\n';
    return r;
}

struct SweepArgs {
    SimConfig cfg;
    LatticeKind lattice = LatticeKind::ZN;
    std::vector<int> ns;
    std::vector<double> lambdas;
    std::vector<double> gammas;
    SweepMode mode = SweepMode::Simulate;
    Units units;
};

inline void sweep(std::ostream& os, const SweepArgs& a, std::size_t cap = kDefaultEnumerationCap) {
    os << "# nlmod sweep\n";
    csv::comment(os, "units", a.units.name());
    csv::comment(os, "lattice", lattice_flag(a.lattice));
    csv::comment(os, "n", join(a.ns));
    csv::comment(os, "lambda", join(a.lambdas));
    csv::comment(os, "gamma", join(a.gammas));
    csv::comment(os, "P", csv::real(a.cfg.power));
    csv::comment(os, "alpha", csv::real(a.cfg.alpha));
    csv::comment(os, "trials", std::to_string(a.cfg.trials));
    csv::comment(os, "seed", std::to_string(a.cfg.seed));
    csv::comment(os, "tilt", a.cfg.tilt ? csv::real(*a.cfg.tilt) : "auto");
    csv::comment(os, "outage", a.cfg.outage.type == OutageKind::Type::SphereRadius ? "sphere" : "decode");
    csv::comment(os, "mode", a.mode == SweepMode::ExactSphere ? "exact" : "simulate");
    csv::comment(os, "u_grid", std::to_string(a.cfg.u_grid));
    os << sim_header << '\n';
    const auto rows = sweep_exponents(a.cfg, a.lattice, a.ns, a.lambdas, a.gammas, a.mode, cap);
    for (const auto& r : rows) {
        if (!r.feasible || !r.note.empty())
            os << "# n=" << r.n << " lambda=" << csv::real(r.lambda) << " gamma=" << csv::real(r.gamma) << ": "
               << (r.feasible ? "" : "infeasible: ") << r.note << '\n';
        csv::row(os, {std::to_string(r.n), csv::real(r.lambda), csv::real(r.gamma), csv::real(r.alpha),
                      csv::real(r.p_out), csv::real(r.stderr_p), csv::real(a.units(r.emp_outage_exp)),
                      csv::real(r.worst_cost), csv::real(a.units(r.emp_cost_exp)), csv::real(a.units(r.e_upper)),
                      csv::real(a.units(r.e_lower))});
    }
}

struct LatticeInfoArgs {
    LatticeKind lattice = LatticeKind::ZN;
    int n = 8;
    double power = 1.0;
    double sigma = 1.0;
    std::optional<std::size_t> m;
};

/// Lattice summary as comments, then the generator rows or, with M, the codebook export.
inline void lattice_info(std::ostream& os, const LatticeInfoArgs& a, std::size_t cap = kDefaultEnumerationCap) {
    const auto lat = LatticeDef::make(a.lattice, a.n);
    os << "# nlmod lattice-info\n";
    csv::comment(os, "lattice", lat.name());
    csv::comment(os, "dimension", std::to_string(lat.dimension()));
    csv::comment(os, "voronoi_volume", csv::real(lat.voronoi_volume()));
    csv::comment(os, "sigma", csv::real(a.sigma));
    if (!a.m) {
        csv::comment(os, "nvnr", csv::real(nvnr(lat, 1.0, a.sigma * a.sigma)));
        const auto shell = enumerate_ball(lat, 1.0, std::sqrt(lat.kind() == LatticeKind::ZN ? 1.0 : 2.0), cap);
        csv::comment(os, "minimal_vectors", std::to_string(shell.size() - 1));
        os << "row";
        for (int j = 0; j < lat.dimension(); ++j) os << ",g" << j;
        os << '\n';
        for (int i = 0; i < lat.dimension(); ++i) {
            os << i;
            for (int j = 0; j < lat.dimension(); ++j) os << ',' << fmt::format("{:.12g}", lat.generator(i, j));
            os << '\n';
        }
        return;
    }
    const auto cb = build_codebook(lat, a.n, a.power, *a.m, cap);
    csv::comment(os, "P", csv::real(a.power));
    csv::comment(os, "M", std::to_string(cb.size()));
    csv::comment(os, "scale", csv::real(cb.scale()));
    csv::comment(os, "rate", csv::real(cb.rate()));
    csv::comment(os, "nvnr", csv::real(nvnr(lat, cb.scale(), a.sigma * a.sigma)));
    write_codebook_csv(os, cb);
}

}  // namespace nlmod::cmd
