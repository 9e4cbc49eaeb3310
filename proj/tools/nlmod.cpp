// nlmod: exponent curves, lattice inspection and AWGN simulations of the
// quantize-and-lattice-code modulation scheme, all emitted as CSV.
//
// Exit codes: 0 success, 2 usage error, 3 infeasible configuration.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlmod/commands.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kInfeasible = 3;

// Options shared by the simulate and sweep verbs.
struct SimFlags {
    std::string lattice = "z";
    std::string outage = "decode";
    std::optional<double> tilt;
    bool plain = false;
};

void add_sim_flags(CLI::App* sub, nlmod::SimConfig& cfg, SimFlags& f) {
    sub->add_option("--P", cfg.power, "Power limit P per channel use")->check(CLI::PositiveNumber);
    sub->add_option("--alpha", cfg.alpha, "Error cost power alpha")->check(CLI::Range(1.0, 1e6));
    sub->add_option("--trials", cfg.trials, "Trials per grid point")->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "Master seed");
    sub->add_option("--tilt", f.tilt, "Noise variance inflation for importance sampling (>= 1)");
    sub->add_option("--lattice", f.lattice, "Base lattice")->check(CLI::IsMember({"z", "d", "e8"}));
    sub->add_option("--outage", f.outage, "Outage event")->check(CLI::IsMember({"decode", "sphere"}));
    sub->add_option("--u-grid", cfg.u_grid, "Uniform grid points on [0,1]")->check(CLI::PositiveNumber);
    sub->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void apply_sim_flags(nlmod::SimConfig& cfg, const SimFlags& f) {
    cfg.tilt = f.tilt;
    cfg.outage = f.outage == "sphere" ? nlmod::OutageKind::sphere(0.0) : nlmod::OutageKind::decode_error();
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
    for (const auto& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
}

// CLI11 only reads config files at the top level, so key=value lines from
// --config FILE are spliced in after the subcommand as --key=value. Keys also
// given on the command line are skipped: flags override the file.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty() || args.size() < 2) return args;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::vector<std::string> injected;
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#' || line[first] == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        auto trim = [](std::string t) {
            const auto a = t.find_first_not_of(" \t\r\"");
            const auto b = t.find_last_not_of(" \t\r\"");
            return a == std::string::npos ? std::string() : t.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string flag = "--" + key;
        if (!given_on_command_line(args, flag)) injected.push_back(flag + "=" + trim(line.substr(eq + 1)));
    }
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak-noise error-cost exponents and quantize-and-code AWGN simulations"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string out_path;
    bool bits = false;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", out_path, "Write CSV to FILE instead of stdout");
        sub->add_flag("--bits", bits, "Report rates and exponents in bits");
        sub->add_option("--config", "key=value config file; flags override")->check(CLI::ExistingFile);
    };

    // exponents
    nlmod::cmd::ExponentsArgs ex;
    auto* sub_ex = app.add_subcommand("exponents", "E_U / E_L table over a lambda grid");
    sub_ex->add_option("--lambda", ex.lambdas, "Outage exponents (comma separated)")->delimiter(',');
    sub_ex->add_option("--gamma", ex.gamma, "SNR")->check(CLI::PositiveNumber);
    sub_ex->add_option("--alpha", ex.alpha, "Error cost power")->check(CLI::Range(1.0, 1e6));
    add_common(sub_ex);

    // tradeoff
    nlmod::cmd::TradeoffArgs tr;
    auto* sub_tr = app.add_subcommand("tradeoff", "Dense E_U / E_L curves for plotting");
    sub_tr->add_option("--gamma", tr.gammas, "SNR values (comma separated)")->delimiter(',')->required();
    sub_tr->add_option("--lambda-min", tr.lambda_min, "Smallest lambda")->check(CLI::PositiveNumber);
    sub_tr->add_option("--lambda-max", tr.lambda_max, "Largest lambda")->check(CLI::PositiveNumber);
    sub_tr->add_option("--points", tr.points, "Points per curve")->check(CLI::PositiveNumber);
    sub_tr->add_option("--alpha", tr.alpha, "Error cost power")->check(CLI::Range(1.0, 1e6));
    add_common(sub_tr);

    // simulate
    nlmod::cmd::SimulateArgs sim;
    SimFlags sim_flags;
    std::optional<std::size_t> sim_m;
    std::optional<double> sim_rate;
    std::optional<double> sim_theta;
    std::string decode = "codebook";
    bool no_edges = false;
    auto* sub_sim = app.add_subcommand("simulate", "Monte Carlo run of one scheme configuration");
    sub_sim->add_option("--n", sim.cfg.n, "Block length")->check(CLI::PositiveNumber);
    sub_sim->add_option("--sigma", sim.cfg.sigma, "Noise standard deviation")->check(CLI::PositiveNumber);
    sub_sim->add_option("--lambda", sim.cfg.lambda, "Outage exponent")->check(CLI::NonNegativeNumber);
    auto* opt_m = sub_sim->add_option("--M", sim_m, "Quantizer bins");
    auto* opt_rate = sub_sim->add_option("--rate", sim_rate, "Code rate in nats (M = ceil(e^{nR}))");
    opt_m->excludes(opt_rate);
    sub_sim->add_option("--theta", sim_theta, "Sphere outage radius parameter (default w(lambda))");
    sub_sim->add_flag("--pairing", sim.pairing, "Map bin pairs to one codeword");
    sub_sim->add_option("--decode", decode, "Decode-error judgement")->check(CLI::IsMember({"codebook", "lattice"}));
    sub_sim->add_flag("--plain", sim_flags.plain, "Plain Monte Carlo, ignoring --tilt");
    sub_sim->add_flag("--no-edges", no_edges, "Omit bin-edge points from the u grid");
    add_sim_flags(sub_sim, sim.cfg, sim_flags);
    add_common(sub_sim);

    // sweep
    nlmod::cmd::SweepArgs sw;
    SimFlags sw_flags;
    std::string sweep_mode = "simulate";
    auto* sub_sw = app.add_subcommand("sweep", "Empirical exponents over an (n, lambda, gamma) grid");
    sub_sw->add_option("--n", sw.ns, "Block lengths (comma separated)")->delimiter(',');
    sub_sw->add_option("--lambda", sw.lambdas, "Outage exponents (comma separated)")->delimiter(',');
    sub_sw->add_option("--gamma", sw.gammas, "SNR values (comma separated)")->delimiter(',');
    sub_sw->add_option("--mode", sweep_mode, "simulate or exact (sphere outage, no Monte Carlo)")
        ->check(CLI::IsMember({"simulate", "exact"}));
    add_sim_flags(sub_sw, sw.cfg, sw_flags);
    add_common(sub_sw);

    // lattice-info
    nlmod::cmd::LatticeInfoArgs li;
    std::string li_lattice = "z";
    auto* sub_li = app.add_subcommand("lattice-info", "Lattice summary or codebook export");
    sub_li->add_option("--lattice", li_lattice, "Base lattice")->check(CLI::IsMember({"z", "d", "e8"}));
    sub_li->add_option("--n", li.n, "Dimension")->check(CLI::PositiveNumber);
    sub_li->add_option("--P", li.power, "Power limit")->check(CLI::PositiveNumber);
    sub_li->add_option("--sigma", li.sigma, "Noise standard deviation for the NVNR")->check(CLI::PositiveNumber);
    sub_li->add_option("--M", li.m, "Export the M-point codebook");
    add_common(sub_li);

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::vector<char*> ptrs;
        for (auto& a : args) ptrs.push_back(a.data());
        app.parse(static_cast<int>(ptrs.size()), ptrs.data());
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    std::unique_ptr<std::ofstream> file;
    std::ostream* os = &std::cout;
    if (!out_path.empty()) {
        file = std::make_unique<std::ofstream>(out_path, std::ios::binary);
        if (!*file) {
            std::cerr << "error: cannot open " << out_path << " for writing\n";
            return kUsage;
        }
        os = file.get();
    }
    const nlmod::cmd::Units units{bits};

    try {
        if (*sub_ex) {
            ex.units = units;
            nlmod::cmd::exponents(*os, ex);
        } else if (*sub_tr) {
            tr.units = units;
            nlmod::cmd::tradeoff(*os, tr);
        } else if (*sub_sim) {
            apply_sim_flags(sim.cfg, sim_flags);
            sim.lattice = nlmod::cmd::parse_lattice(sim_flags.lattice);
            sim.plain = sim_flags.plain;
            sim.m = sim_m;
            sim.rate = sim_rate;
            sim.theta = sim_theta;
            sim.rule = decode == "lattice" ? nlmod::DecodeRule::FullLattice : nlmod::DecodeRule::Codebook;
            sim.cfg.bin_edges = !no_edges;
            sim.units = units;
            nlmod::cmd::simulate(*os, sim);
        } else if (*sub_sw) {
            apply_sim_flags(sw.cfg, sw_flags);
            sw.lattice = nlmod::cmd::parse_lattice(sw_flags.lattice);
            sw.mode = sweep_mode == "exact" ? nlmod::SweepMode::ExactSphere : nlmod::SweepMode::Simulate;
            sw.units = units;
            nlmod::cmd::sweep(*os, sw);
        } else if (*sub_li) {
            li.lattice = nlmod::cmd::parse_lattice(li_lattice);
            nlmod::cmd::lattice_info(*os, li);
        }
    } catch (const nlmod::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const nlmod::ResourceError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const nlmod::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    os->flush();
    return 0;
}
