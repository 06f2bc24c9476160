// tcpshare: equilibrium solver, simulator and analysis front end.

#include "tcpshare/cli.hpp"
#include "tcpshare/config_file.hpp"
#include "tcpshare/trace_store.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace tcpshare;
using namespace tcpshare::cli;

namespace {

struct SimulateFlags {
    std::optional<std::filesystem::path> config;
    std::string scenario = "shared";
    std::string flavor = "reno";
    std::optional<std::string> flows;
    std::optional<double> p_loss;
    std::optional<double> capacity;
    std::optional<double> buffer;
    std::optional<double> jitter;
    std::optional<double> duration;
    std::optional<double> volume;
    std::optional<int> repetitions;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    double rtt = 0.1;
};

ScenarioConfig build_config(const SimulateFlags& f)
{
    if (f.config) {
        ScenarioConfig cfg = load_config_file(*f.config);
        if (f.seed) cfg.seed = *f.seed;
        if (f.duration) cfg.duration_s = *f.duration;
        cfg.validate();
        return cfg;
    }
    const Scenario scenario = parse_scenario(f.scenario);
    const Flavor flavor = parse_flavor(f.flavor);
    const std::uint64_t seed = f.seed.value_or(7);
    ScenarioConfig cfg;
    switch (scenario) {
    case Scenario::RandomDrop: {
        if (!f.p_loss) throw std::invalid_argument("random-drop needs --p-loss");
        cfg = make_random_drop(flavor, *f.p_loss, f.rtt, f.duration.value_or(7500.0), seed);
        break;
    }
    case Scenario::SharedBottleneck:
    case Scenario::FiniteFlow: {
        const bool finite = scenario == Scenario::FiniteFlow;
        const auto groups = parse_flow_list(f.flows.value_or(finite ? "9x" + f.flavor : "2x" + f.flavor));
        int n = 0;
        for (const auto& [count, fl] : groups) n += count;
        const double capacity = f.capacity.value_or((n + (finite ? 1 : 0)) * 10e6);
        if (finite) {
            cfg = make_finite(n, flavor, capacity, f.rtt, f.volume.value_or(12e6), f.repetitions.value_or(500), seed);
        } else {
            cfg = make_shared(n, flavor, capacity, f.rtt, f.duration.value_or(7500.0), seed);
        }
        std::size_t k = 0;
        for (const auto& [count, fl] : groups) {
            for (int i = 0; i < count; ++i) cfg.flows[k++].tcp.flavor = fl;
        }
        if (f.buffer) cfg.link->buffer_bytes = *f.buffer;
        if (finite && f.duration) cfg.duration_s = *f.duration;
        break;
    }
    }
    if (f.mode) cfg.loss_reaction = parse_loss_reaction(*f.mode);
    if (f.jitter) cfg.tx_jitter_s = *f.jitter;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rate distribution of TCP flows: Markov chain solver, simulator and trace analysis"};
    app.require_subcommand(1);
    app.fallthrough();
    std::optional<std::filesystem::path> out_flag;
    app.add_option("--out", out_flag, "output directory (default $TCPSHARE_OUT or ./tcpshare-out)");

    SolveOptions solve_opt;
    auto* solve_cmd = app.add_subcommand("solve", "solve the window Markov chain at a loss probability");
    solve_cmd->add_option("--p-loss,-p", solve_opt.p_loss, "loss probability")->required();
    solve_cmd->add_option("--a,--ack-ratio", solve_opt.ack_ratio, "segments per ACK")->capture_default_str();
    solve_cmd->add_option("--rtt", solve_opt.rtt_s, "round-trip time, s")->capture_default_str();
    solve_cmd->add_option("--mss", solve_opt.mss_bytes, "packet size, bytes")->capture_default_str();
    solve_cmd->add_option("--cwnd-max", solve_opt.cwnd_max, "largest window state (0 = auto)")->capture_default_str();
    solve_cmd->add_option("--sigma", solve_opt.sigma, "log-normal shape for the KS comparison")->capture_default_str();

    SimulateFlags sim;
    auto* sim_cmd = app.add_subcommand("simulate", "run a simulation and store its rate trace");
    sim_cmd->add_option("--config", sim.config, "scenario file (other scenario flags except --seed/--duration are ignored)");
    sim_cmd->add_option("--scenario", sim.scenario, "random-drop | shared | finite")->capture_default_str();
    sim_cmd->add_option("--flavor", sim.flavor, "reno | cubic")->capture_default_str();
    sim_cmd->add_option("--flows", sim.flows, "flow list such as 2xreno or 1xreno,1xcubic (long-lived flows for finite)");
    sim_cmd->add_option("--p-loss", sim.p_loss, "random-drop loss probability");
    sim_cmd->add_option("--rtt", sim.rtt, "base round-trip time, s")->capture_default_str();
    sim_cmd->add_option("--capacity", sim.capacity, "bottleneck capacity, bit/s (default 10 Mbit/s per flow)");
    sim_cmd->add_option("--buffer", sim.buffer, "bottleneck buffer, bytes (default bandwidth-delay product)");
    sim_cmd->add_option("--jitter", sim.jitter, "host transmit jitter, s (default one service time)");
    sim_cmd->add_option("--duration", sim.duration, "simulated time, s (default 7500)");
    sim_cmd->add_option("--volume", sim.volume, "finite flow volume, bytes (default 12e6)");
    sim_cmd->add_option("--repetitions", sim.repetitions, "finite flow repetitions (default 500)");
    sim_cmd->add_option("--seed", sim.seed, "random seed (default 7)");
    sim_cmd->add_option("--mode", sim.mode, "loss reaction: per-loss | per-window");

    AnalyzeOptions an;
    std::string intervals_text;
    std::string quantiles_text;
    auto* an_cmd = app.add_subcommand("analyze", "statistics of a stored trace");
    an_cmd->add_option("trace", an.trace, "trace stem, .trace.csv or .meta.json")->required();
    an_cmd->add_option("--intervals", intervals_text, "comma-separated averaging intervals, s");
    an_cmd->add_option("--bins", an.bin_width_bps, "histogram bin width, bit/s")->capture_default_str();
    an_cmd->add_option("--quantiles", quantiles_text, "comma-separated quantiles in percent (default 5,50,95)");
    an_cmd->add_option("--flow", an.flow, "flow index")->capture_default_str();

    ReproduceOptions rep;
    auto* rep_cmd = app.add_subcommand("reproduce", "regenerate a figure or table");
    rep_cmd->add_option("target", rep.target, "fig2..fig8, table1, table2")->required()->check(
        CLI::IsMember(reproduce_targets()));
    rep_cmd->add_flag("--full", rep.full, "12 h runs and 2500 repetitions");
    rep_cmd->add_option("--jobs", rep.jobs, "worker threads (0 = all cores)");

    VerifyOptions ver;
    std::vector<int> only;
    auto* ver_cmd = app.add_subcommand("verify", "run the acceptance checks");
    ver_cmd->add_flag("--quick", ver.quick, "skip the long simulation checks");
    ver_cmd->add_option("--only", only, "check ids to run")->delimiter(',');
    ver_cmd->add_option("--sigma", ver.sigma, "log-normal shape for the KS checks")->capture_default_str();
    ver_cmd->add_option("--jobs", ver.jobs, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    auto split_doubles = [](const std::string& text) {
        std::vector<double> v;
        std::size_t pos = 0;
        while (pos <= text.size() && !text.empty()) {
            const auto comma = text.find(',', pos);
            const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(item, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != item.size()) throw std::invalid_argument("not a number: '" + item + "'");
            v.push_back(x);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return v;
    };

    try {
        const auto out_dir = output_dir(out_flag);
        if (*solve_cmd) {
            solve_opt.out_dir = out_dir;
            return cmd_solve(solve_opt, std::cout);
        }
        if (*sim_cmd) {
            return cmd_simulate(SimulateOptions{build_config(sim), out_dir}, std::cout);
        }
        if (*an_cmd) {
            an.out_dir = out_dir;
            if (!intervals_text.empty()) an.intervals_s = split_doubles(intervals_text);
            if (!quantiles_text.empty()) an.quantiles_pct = split_doubles(quantiles_text);
            return cmd_analyze(an, std::cout);
        }
        if (*rep_cmd) {
            rep.out_dir = out_dir;
            return cmd_reproduce(rep, std::cout);
        }
        if (*ver_cmd) {
            ver.only.insert(only.begin(), only.end());
            return cmd_verify(ver, std::cout);
        }
    } catch (const TraceIoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        // invalid input: bad flags, config errors, solver limits, empty data
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
