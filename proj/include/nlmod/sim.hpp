#pragma once

// AWGN Monte Carlo for the quantize-and-code scheme. The worst case over a
// grid of parameter values stands in for the supremum over u in [0, 1].
// Rare outages are reached by drawing noise with inflated variance and
// reweighting by the exact Gaussian likelihood ratio.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "nlmod/cost.hpp"
#include "nlmod/error.hpp"
#include "nlmod/exponents.hpp"
#include "nlmod/lattice.hpp"
#include "nlmod/scheme.hpp"

namespace nlmod {

struct SimConfig {
    int n = 8;
    double power = 1.0;
    double sigma = 0.1;
    double lambda = 0.1;
    double alpha = 2.0;
    std::int64_t trials = 10000;
    std::uint64_t seed = 1;
    OutageKind outage = OutageKind::decode_error();
    std::optional<double> tilt;  ///< noise variance inflation factor for importance sampling
    int u_grid = 16;             ///< uniform points on [0, 1]
    bool bin_edges = true;       ///< add bin edges j/M and j/M +- 1e-9 to the grid
    std::size_t max_edges = 1024;  ///< beyond this many bins, edges of evenly strided bins only
    std::int64_t chunk = 4096;   ///< trials per independently seeded unit of work
    int threads = 1;

    double gamma() const { return power / (sigma * sigma); }

    void validate() const {
        if (n < 1) throw DomainError("SimConfig: n must be >= 1");
        if (!(power > 0.0)) throw DomainError("SimConfig: P must be > 0");
        if (!(sigma > 0.0)) throw DomainError("SimConfig: sigma must be > 0");
        if (trials < 1) throw DomainError("SimConfig: trials must be >= 1");
        if (tilt && !(*tilt > 0.0)) throw DomainError("SimConfig: tilt must be > 0");
        if (u_grid < 1) throw DomainError("SimConfig: u_grid must be >= 1");
        if (chunk < 1) throw DomainError("SimConfig: chunk must be >= 1");
        if (!std::isfinite(alpha) || alpha < 1.0) throw DomainError("SimConfig: alpha must be >= 1");
    }
};

struct SimResult {
    double p_out = 0.0;
    double stderr_p = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double emp_outage_exp = std::numeric_limits<double>::infinity();
    double worst_cost = 0.0;
    double emp_cost_exp = std::numeric_limits<double>::infinity();
    double trials_effective = 0.0;  ///< effective sample size at the worst-case u
    double worst_u = 0.0;
    std::int64_t trials = 0;        ///< per grid point
    std::size_t grid_points = 0;
    std::int64_t outage_hits = 0;   ///< raw outage count at the worst-case u
    bool degenerate_ci = false;     ///< fewer than two trials per u
    bool cost_undefined = false;    ///< some u saw no non-outage trial
    bool no_hits = false;           ///< no outage observed anywhere
    std::vector<double> grid_u;      ///< the parameter grid
    std::vector<double> grid_p_out;  ///< outage estimate at each grid point
};

/// Parameter grid: u_grid uniform points, optionally bin edges and their +-1e-9 neighbours.
/// With more than max_edges bins only every stride-th edge (plus u = 1) is kept.
inline std::vector<double> make_u_grid(int uniform, std::size_t bins, bool edges,
                                       std::size_t max_edges = std::numeric_limits<std::size_t>::max()) {
    std::vector<double> g;
    if (uniform == 1) {
        g.push_back(0.5);
    } else {
        for (int j = 0; j < uniform; ++j) g.push_back(static_cast<double>(j) / (uniform - 1));
    }
    if (edges) {
        const double m = static_cast<double>(bins);
        const std::size_t stride = bins <= max_edges ? 1 : (bins + max_edges - 1) / std::max<std::size_t>(max_edges, 1);
        for (std::size_t j = 0; j <= bins; j = (j < bins && j + stride > bins) ? bins : j + stride) {
            const double e = static_cast<double>(j) / m;
            for (double u : {e - 1e-9, e, e + 1e-9})
                if (u >= 0.0 && u <= 1.0) g.push_back(u);
        }
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the (grid point, chunk) work unit; independent of execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t grid_index, std::uint64_t chunk_index) {
    return splitmix64(splitmix64(master) ^ splitmix64((grid_index << 32) ^ chunk_index ^ 0x5bd1e995ULL));
}

namespace detail {

// Sufficient statistics of one work unit. Weights are stored relative to the
// largest attainable likelihood ratio so they never exceed 1.
struct Tally {
    std::int64_t count = 0;
    std::int64_t hits = 0;
    double sum_wi = 0.0;
    double sum_wi2 = 0.0;
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    double ok_weight = 0.0;  // total weight of non-outage trials
    double cost_mean = 0.0;  // weighted running mean of cost over non-outage trials

    void add_cost(double w, double cost) {
        ok_weight += w;
        cost_mean += (w / ok_weight) * (cost - cost_mean);
    }

    void merge(const Tally& o) {
        count += o.count;
        hits += o.hits;
        sum_wi += o.sum_wi;
        sum_wi2 += o.sum_wi2;
        sum_w += o.sum_w;
        sum_w2 += o.sum_w2;
        if (o.ok_weight > 0.0) {
            const double total = ok_weight + o.ok_weight;
            cost_mean += (o.ok_weight / total) * (o.cost_mean - cost_mean);
            ok_weight = total;
        }
    }
};

inline Tally run_unit(const SimConfig& cfg, const ModScheme& s, const PowerCost& cost, double u, double tilt,
                      std::uint64_t seed, std::int64_t count) {
    const int n = s.dimension();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto coin = [&rng] { return (rng() & 1ULL) != 0; };
    const double draw_sigma = cfg.sigma * std::sqrt(tilt);
    // log w(z) - log w_max = -||z||^2 (1 - 1/tilt) / (2 sigma^2) <= 0
    const double decay = (1.0 - 1.0 / tilt) / (2.0 * cfg.sigma * cfg.sigma);

    Tally t;
    Vec z(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < count; ++k) {
        for (double& v : z) v = draw_sigma * normal(rng);
        const double w = decay > 0.0 ? std::exp(-detail::norm2(z) * decay) : 1.0;
        const TrialOutcome r = transmit(s, u, z, cfg.sigma, coin);
        ++t.count;
        t.sum_w += w;
        t.sum_w2 += w * w;
        if (r.outage) {
            ++t.hits;
            t.sum_wi += w;
            t.sum_wi2 += w * w;
        } else {
            t.add_cost(w, cost.rho(r.estimate - u));
        }
    }
    return t;
}

inline SimResult simulate(const SimConfig& cfg, const ModScheme& s, double tilt) {
    cfg.validate();
    if (cfg.n != s.dimension())
        throw DomainError(fmt::format("simulation n = {} but scheme dimension is {}", cfg.n, s.dimension()));
    const PowerCost cost(cfg.alpha);
    const auto grid = make_u_grid(cfg.u_grid, s.bins(), cfg.bin_edges, cfg.max_edges);
    const std::int64_t chunks = (cfg.trials + cfg.chunk - 1) / cfg.chunk;
    const std::size_t units = grid.size() * static_cast<std::size_t>(chunks);

    std::vector<Tally> tallies(units);
    auto work = [&](std::size_t unit) {
        const std::size_t gi = unit / static_cast<std::size_t>(chunks);
        const auto ci = static_cast<std::int64_t>(unit % static_cast<std::size_t>(chunks));
        const std::int64_t count = std::min(cfg.chunk, cfg.trials - ci * cfg.chunk);
        tallies[unit] = run_unit(cfg, s, cost, grid[gi], tilt, derive_seed(cfg.seed, gi, static_cast<std::uint64_t>(ci)),
                                 count);
    };
    const int threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(units)));
    if (threads == 1) {
        for (std::size_t u = 0; u < units; ++u) work(u);
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t u = static_cast<std::size_t>(t); u < units; u += static_cast<std::size_t>(threads))
                    work(u);
            });
    }

    // Likelihood ratio at z = 0, factored out of every stored weight.
    const double log_wmax = 0.5 * cfg.n * std::log(tilt);
    const double wmax = std::exp(log_wmax);

    SimResult res;
    res.trials = cfg.trials;
    res.grid_points = grid.size();
    res.degenerate_ci = cfg.trials < 2;
    double best_p = -1.0;
    double worst_cost = -1.0;
    bool any_hits = false;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        Tally t;
        for (std::int64_t ci = 0; ci < chunks; ++ci) t.merge(tallies[gi * static_cast<std::size_t>(chunks) + static_cast<std::size_t>(ci)]);
        const double nn = static_cast<double>(t.count);
        const double mean = t.sum_wi / nn;
        const double p = wmax * mean;
        res.grid_u.push_back(grid[gi]);
        res.grid_p_out.push_back(std::min(p, 1.0));
        any_hits = any_hits || t.hits > 0;
        if (p > best_p) {
            best_p = p;
            res.p_out = std::min(p, 1.0);
            res.worst_u = grid[gi];
            res.outage_hits = t.hits;
            if (t.count >= 2) {
                const double var = std::max(0.0, (t.sum_wi2 / nn - mean * mean) * nn / (nn - 1.0));
                res.stderr_p = wmax * std::sqrt(var / nn);
            } else {
                res.stderr_p = 0.0;
            }
            res.trials_effective = t.sum_w2 > 0.0 ? t.sum_w * t.sum_w / t.sum_w2 : 0.0;
        }
        if (t.ok_weight > 0.0) {
            worst_cost = std::max(worst_cost, t.cost_mean);
        } else {
            res.cost_undefined = true;
        }
    }
    res.no_hits = !any_hits;
    res.ci_lo = std::max(0.0, res.p_out - 1.96 * res.stderr_p);
    res.ci_hi = std::min(1.0, res.p_out + 1.96 * res.stderr_p);
    res.emp_outage_exp = res.p_out > 0.0 ? -std::log(res.p_out) / cfg.n : std::numeric_limits<double>::infinity();
    res.worst_cost = worst_cost >= 0.0 ? worst_cost : std::numeric_limits<double>::quiet_NaN();
    res.emp_cost_exp = res.worst_cost > 0.0 ? -std::log(res.worst_cost) / cfg.n
                                            : std::numeric_limits<double>::infinity();
    return res;
}

}  // namespace detail

/// Plain Monte Carlo: noise drawn from N(0, sigma^2 I). Any tilt in cfg is ignored.
inline SimResult run_plain_mc(const SimConfig& cfg, const ModScheme& s) { return detail::simulate(cfg, s, 1.0); }

/// Importance-sampled Monte Carlo with noise drawn from N(0, tilt sigma^2 I).
/// tilt = 1 consumes the same random stream as run_plain_mc.
inline SimResult run_importance_sampled(const SimConfig& cfg, const ModScheme& s) {
    const double tilt = cfg.tilt.value_or(1.0);
    if (!(tilt >= 1.0)) throw DomainError(fmt::format("importance sampling needs tilt >= 1, got {}", tilt));
    return detail::simulate(cfg, s, tilt);
}

/// Expected outage count is plausibly below one at the given trial budget.
inline bool too_few_trials(double p_guess, std::int64_t trials) { return p_guess * static_cast<double>(trials) < 1.0; }

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepMode {
    Simulate,     ///< importance-sampled Monte Carlo per grid point
    ExactSphere,  ///< sphere outage evaluated exactly; cost is the quantization arithmetic
};

struct SweepRow {
    int n = 0;
    double lambda = 0.0;
    double gamma = 0.0;
    double alpha = 0.0;
    std::size_t m = 0;    ///< codebook bins; 0 when ln M is too large to represent
    double log_m = 0.0;
    double p_out = std::numeric_limits<double>::quiet_NaN();
    double stderr_p = std::numeric_limits<double>::quiet_NaN();
    double emp_outage_exp = std::numeric_limits<double>::quiet_NaN();
    double worst_cost = std::numeric_limits<double>::quiet_NaN();
    double emp_cost_exp = std::numeric_limits<double>::quiet_NaN();
    double e_upper = std::numeric_limits<double>::quiet_NaN();
    double e_lower = std::numeric_limits<double>::quiet_NaN();
    bool feasible = false;
    std::string note;
};

/// Worst weak-noise cost sup_u rho(q(u) - u) over the grid for an M-bin quantizer.
inline double quantization_worst_cost(const PowerCost& cost, std::span<const double> grid, std::size_t bins) {
    double worst = 0.0;
    for (double u : grid) worst = std::max(worst, cost.rho(quantize(u, bins).midpoint - u));
    return worst;
}

/// Builds and evaluates the scheme at every (n, lambda, gamma) of the grid.
///
/// The codebook size is M = ceil(e^{n R}) with R the achievable rate. Power
/// stays at cfg.power and sigma follows from gamma. Rows that cannot be built
/// are reported with feasible = false and the sweep moves on.
inline std::vector<SweepRow> sweep_exponents(const SimConfig& base, LatticeKind lattice,
                                             std::span<const int> n_list, std::span<const double> lambda_list,
                                             std::span<const double> gamma_list, SweepMode mode = SweepMode::Simulate,
                                             std::size_t cap = kDefaultEnumerationCap) {
    std::vector<SweepRow> rows;
    const PowerCost cost(base.alpha);
    for (int n : n_list)
        for (double lambda : lambda_list)
            for (double gamma : gamma_list) {
                SweepRow row;
                row.n = n;
                row.lambda = lambda;
                row.gamma = gamma;
                row.alpha = base.alpha;
                try {
                    const TradeoffParams tp{lambda, gamma, base.alpha};
                    const auto cp = curve_point(tp);
                    row.e_upper = cp.e_upper;
                    row.e_lower = cp.e_lower;
                    const double rate = cp.rate_achievable;
                    if (!(rate > 0.0)) throw InfeasibleError("achievable rate is not positive");
                    // ln ceil(e^{nR}), exact while e^{nR} is an integer-representable double
                    const double nr = n * rate;
                    row.log_m = nr < 36.0 ? std::log(std::max(2.0, std::ceil(std::exp(nr)))) : nr;
                    if (row.log_m <= std::log(static_cast<double>(cap)))
                        row.m = static_cast<std::size_t>(std::llround(std::exp(row.log_m)));

                    SimConfig cfg = base;
                    cfg.n = n;
                    cfg.lambda = lambda;
                    cfg.sigma = std::sqrt(base.power / gamma);
                    if (cfg.outage.type == OutageKind::Type::SphereRadius) cfg.outage.theta = cp.w;

                    if (mode == SweepMode::ExactSphere) {
                        // No Monte Carlo: the worst weak-noise error sits on a bin edge and equals 1/2M.
                        row.p_out = sphere_outage_prob(n, cp.w);
                        row.stderr_p = 0.0;
                        row.emp_outage_exp = -log_sphere_outage_prob(n, cp.w) / n;
                        row.worst_cost = std::exp(-cost.alpha() * (std::log(2.0) + row.log_m));
                        row.emp_cost_exp = cost.alpha() * (std::log(2.0) + row.log_m) / n;
                        row.feasible = true;
                        rows.push_back(std::move(row));
                        continue;
                    }
                    if (row.m == 0)
                        throw InfeasibleError(
                            fmt::format("M = e^(nR) = e^{:.4g} exceeds the enumeration cap {}", row.log_m, cap));
                    {
                        const auto lat = LatticeDef::make(lattice, n);
                        const auto scheme = make_scheme(lat, n, cfg.power, row.m, false, cfg.outage,
                                                        DecodeRule::Codebook, cap);
                        if (!cfg.tilt && cfg.outage.type == OutageKind::Type::SphereRadius)
                            cfg.tilt = 1.0 + cp.w;
                        const SimResult r = run_importance_sampled(cfg, scheme);
                        row.p_out = r.p_out;
                        row.stderr_p = r.stderr_p;
                        row.emp_outage_exp = r.emp_outage_exp;
                        row.worst_cost = r.worst_cost;
                        if (r.no_hits) row.note = "no outage observed";
                    }
                    row.emp_cost_exp = row.worst_cost > 0.0 ? -std::log(row.worst_cost) / n
                                                            : std::numeric_limits<double>::infinity();
                    row.feasible = true;
                } catch (const std::exception& e) {
                    row.feasible = false;
                    row.note = e.what();
                }
                rows.push_back(std::move(row));
            }
    return rows;
}

}  // namespace nlmod
