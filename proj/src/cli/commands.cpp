#include "tcpshare/cli.hpp"

#include "common.hpp"
#include "tcpshare/sim.hpp"
#include "tcpshare/stats.hpp"
#include "tcpshare/tcp_formulas.hpp"
#include "tcpshare/trace_store.hpp"

#include <cmath>
#include <cstdlib>

namespace tcpshare::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using detail::mbps;

fs::path output_dir(const std::optional<fs::path>& flag)
{
    if (flag) return *flag;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "tcpshare-out";
}

// ---------------------------------------------------------------- solve

SolveResult solve(const SolveOptions& opt)
{
    if (!(opt.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    ChainSpec spec;
    spec.p_loss = opt.p_loss;
    spec.ack_ratio = opt.ack_ratio;
    spec.cwnd_max = opt.cwnd_max;
    spec.rtt_s = opt.rtt_s;
    spec.mss_bytes = opt.mss_bytes;
    spec.validate();
    TcpParams tcp{opt.mss_bytes, opt.rtt_s, opt.ack_ratio, Flavor::Reno};
    tcp.validate();

    SolveResult r;
    r.cwnd_max_auto = opt.cwnd_max == 0;
    const TransitionMatrix matrix = build_transition_matrix(spec);
    const StateDistribution dist = solve_equilibrium(matrix);
    r.spec = dist.spec;
    r.residual = balance_residual(matrix, dist);
    const DiscretePmf rates = rate_distribution(dist);
    r.rate = distribution_stats(rates);
    r.mean_cwnd = dist.mean_cwnd();
    r.expected_cwnd = reno_expected_cwnd(opt.p_loss, opt.ack_ratio);
    r.ks_to_lognormal = ks_distance(dist, r.expected_cwnd, opt.sigma);

    const json identity{{"p_loss", opt.p_loss}, {"ack_ratio", opt.ack_ratio}, {"rtt_s", opt.rtt_s},
                        {"mss_bytes", opt.mss_bytes}, {"cwnd_max", r.spec.cwnd_max}};
    r.id = "chain-" + content_id(identity.dump());
    r.pmf_csv = opt.out_dir / (r.id + ".pmf.csv");
    r.summary_json = opt.out_dir / (r.id + ".summary.json");

    std::string csv = "cwnd,probability,rate_bps,cdf\n";
    double cdf = 0.0;
    for (int i = dist.first_state(); i <= dist.last_state(); ++i) {
        cdf += dist.at(i);
        csv += fmt::format("{},{},{},{}\n", i, dist.at(i), flow_rate(i, tcp), std::min(1.0, cdf));
    }
    detail::write_file(r.pmf_csv, csv);

    json summary{{"p_loss", opt.p_loss},
                 {"ack_ratio", opt.ack_ratio},
                 {"rtt_s", opt.rtt_s},
                 {"mss_bytes", opt.mss_bytes},
                 {"cwnd_max", r.spec.cwnd_max},
                 {"cwnd_max_auto", r.cwnd_max_auto},
                 {"mean_cwnd", r.mean_cwnd},
                 {"expected_cwnd", r.expected_cwnd},
                 {"mean_bps", r.rate.mean},
                 {"stddev_bps", r.rate.stddev},
                 {"quantiles_bps", {{"5", r.rate.q05}, {"50", r.rate.q50}, {"95", r.rate.q95}}},
                 {"sigma", opt.sigma},
                 {"ks_to_lognormal", r.ks_to_lognormal},
                 {"balance_residual", r.residual}};
    detail::write_json(r.summary_json, summary);
    return r;
}

int cmd_solve(const SolveOptions& opt, std::ostream& out)
{
    const SolveResult r = solve(opt);
    out << fmt::format("cwnd_max {}{}  mean cwnd {:.2f} (response function {:.2f})\n", r.spec.cwnd_max,
                       r.cwnd_max_auto ? " (auto)" : "", r.mean_cwnd, r.expected_cwnd);
    out << fmt::format("rate Mbit/s  5%: {:.2f}  50%: {:.2f}  95%: {:.2f}  mean: {:.2f}\n", mbps(r.rate.q05),
                       mbps(r.rate.q50), mbps(r.rate.q95), mbps(r.rate.mean));
    out << fmt::format("KS to log-normal (sigma {}): {:.4f}\n", opt.sigma, r.ks_to_lognormal);
    out << "wrote " << r.pmf_csv.string() << "\n      " << r.summary_json.string() << "\n";
    return kOk;
}

// ------------------------------------------------------------- simulate

std::vector<std::pair<int, Flavor>> parse_flow_list(std::string_view text)
{
    std::vector<std::pair<int, Flavor>> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        std::string_view item = text.substr(0, comma);
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        int count = 1;
        if (const auto x = item.find('x'); x != std::string_view::npos && x > 0) {
            const std::string n(item.substr(0, x));
            char* end = nullptr;
            const long v = std::strtol(n.c_str(), &end, 10);
            if (*end != '\0' || v < 1) throw std::invalid_argument("bad flow count in '" + std::string(item) + "'");
            count = static_cast<int>(v);
            item = item.substr(x + 1);
        }
        out.emplace_back(count, parse_flavor(item));
    }
    if (out.empty()) throw std::invalid_argument("empty flow list");
    return out;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out)
{
    const ScenarioConfig& cfg = opt.config;
    cfg.validate();
    out << fmt::format("simulating {} with {} flow(s) for {} s, seed {}\n", to_string(cfg.scenario), cfg.flows.size(),
                       cfg.duration_s, cfg.seed);

    RateTrace trace;
    std::vector<double> completions;
    std::vector<double> starts;
    if (cfg.scenario == Scenario::FiniteFlow) {
        FiniteFlowResult r = run_finite_flow(cfg);
        trace = std::move(r.trace);
        completions = std::move(r.completion_s);
        starts = std::move(r.start_s);
    } else {
        trace = run_scenario(cfg);
    }
    const RunRecord rec = write_trace(trace, opt.out_dir);

    const LossRatios loss = measured_loss_ratio(trace);
    out << "run_id " << rec.run_id << "\n";
    for (std::size_t f = 0; f < trace.flow_count(); ++f) {
        const FlowCounters& c = trace.counters[f];
        out << fmt::format("  flow {}: sent {} dropped {} loss {:.3g} reductions {}\n", f, c.sent, c.dropped,
                           loss.per_flow[f], c.window_reductions);
    }
    if (cfg.scenario == Scenario::FiniteFlow) {
        std::string csv = "repetition,start_s,completion_s\n";
        for (std::size_t i = 0; i < completions.size(); ++i) {
            csv += fmt::format("{},{},{}\n", i, starts[i], completions[i]);
        }
        const fs::path path = opt.out_dir / (rec.run_id + ".completions.csv");
        detail::write_file(path, csv);
        if (!completions.empty()) {
            const SummaryStats s = summary(completions);
            out << fmt::format("  completion s  5%: {:.2f}  50%: {:.2f}  95%: {:.2f}  ({} repetitions)\n", s.q05,
                               s.q50, s.q95, completions.size());
        }
        out << "wrote " << path.string() << "\n";
    }
    out << "wrote " << rec.trace_csv.string() << "\n      " << rec.meta_json.string() << "\n";
    return kOk;
}

// -------------------------------------------------------------- analyze

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out)
{
    if (!(opt.bin_width_bps > 0.0)) throw std::invalid_argument("bin width must be positive");
    for (double q : opt.quantiles_pct) {
        if (!(q > 0.0 && q <= 100.0)) throw std::invalid_argument("quantiles are percentages in (0, 100]");
    }
    std::vector<std::string> warnings;
    const RateTrace trace = read_trace(opt.trace, &warnings);
    for (const auto& w : warnings) out << "warning: " << w << "\n";
    if (opt.flow >= trace.flow_count() && trace.flow_count() != 0) {
        throw std::invalid_argument(fmt::format("trace has {} flows, no flow {}", trace.flow_count(), opt.flow));
    }
    const IntervalSeries base = trace.flow_count() == 0 ? IntervalSeries{} : reaggregate(trace, trace.interval_s, opt.flow);
    if (base.samples_bps.size() < 2) {
        throw InsufficientData(fmt::format("insufficient data: {} usable interval(s) after warm-up in {}",
                                           base.samples_bps.size(), opt.trace.string()));
    }

    const std::vector<double> intervals = opt.intervals_s.empty() ? default_intervals() : opt.intervals_s;
    std::vector<double> usable;
    const double span = static_cast<double>(base.samples_bps.size()) * trace.interval_s;
    for (double t : intervals) {
        if (t <= span) usable.push_back(t);
    }
    const std::vector<CurvePoint> curve = stddev_vs_interval(trace, usable, opt.flow);
    const std::optional<double> conv = curve.size() >= 2 ? convergence_interval_50(curve) : std::nullopt;

    const SummaryStats s = summary(base.samples_bps);
    const Histogram h = histogram(base.samples_bps, opt.bin_width_bps);
    const LossRatios loss = measured_loss_ratio(trace);
    const double mss = trace.config.flows.at(opt.flow).tcp.mss_bytes;
    const double p_flow = loss.per_flow.at(opt.flow);

    const std::string id = compute_run_id(trace.config, trace.engine_version);
    const fs::path hist_csv = opt.out_dir / (id + ".histogram.csv");
    const fs::path stddev_csv = opt.out_dir / (id + ".stddev.csv");
    const fs::path rate_csv = opt.out_dir / (id + ".rate.csv");
    const fs::path summary_path = opt.out_dir / (id + ".summary.json");

    std::string csv = "bin_center_bps,density_per_bps\n";
    for (std::size_t k = 0; k < h.density.size(); ++k) csv += fmt::format("{},{}\n", h.bin_center(k), h.density[k]);
    detail::write_file(hist_csv, csv);

    csv = "interval_s,stddev_bps\n";
    for (const auto& p : curve) csv += fmt::format("{},{}\n", p.interval_s, p.stddev_bps);
    detail::write_file(stddev_csv, csv);

    csv = "t_end_s,rate_bps\n";
    const double skip = trace.config.warmup_s;
    for (std::size_t k = 0; k < base.samples_bps.size(); ++k) {
        csv += fmt::format("{},{}\n", skip + static_cast<double>(k + 1) * trace.interval_s, base.samples_bps[k]);
    }
    detail::write_file(rate_csv, csv);

    json quantiles = json::object();
    for (double q : opt.quantiles_pct) quantiles[fmt::format("{}", q)] = nearest_rank_quantile(base.samples_bps, q / 100.0);
    json curve_json = json::array();
    for (const auto& p : curve) curve_json.push_back({{"interval_s", p.interval_s}, {"stddev_bps", p.stddev_bps}});
    json summary_j{{"run_id", id},
                   {"flow", opt.flow},
                   {"interval_s", trace.interval_s},
                   {"samples", base.samples_bps.size()},
                   {"mean_bps", s.mean},
                   {"stddev_bps", s.stddev},
                   {"quantiles_bps", quantiles},
                   {"stddev_vs_interval", curve_json},
                   {"convergence_interval_50_s", conv ? json(*conv) : json(nullptr)},
                   {"loss_ratio_flow", p_flow},
                   {"loss_ratio_aggregate", loss.aggregate},
                   {"sawtooth_interval_s",
                    p_flow > 0.0 && s.mean > 0.0 ? json(sawtooth_interval(p_flow, s.mean, mss)) : json(nullptr)}};
    detail::write_json(summary_path, summary_j);

    out << fmt::format("flow {} over {} intervals of {} s\n", opt.flow, base.samples_bps.size(), trace.interval_s);
    std::string qline;
    for (double q : opt.quantiles_pct) {
        qline += fmt::format("  {}%: {:.2f}", q, mbps(nearest_rank_quantile(base.samples_bps, q / 100.0)));
    }
    out << "rate Mbit/s" << qline << fmt::format("  mean: {:.2f}  stddev: {:.2f}\n", mbps(s.mean), mbps(s.stddev));
    out << "50% convergence interval: " << (conv ? fmt::format("{:.1f} s", *conv) : std::string("not reached")) << "\n";
    out << "wrote " << hist_csv.string() << "\n      " << stddev_csv.string() << "\n      " << rate_csv.string()
        << "\n      " << summary_path.string() << "\n";
    return kOk;
}

} // namespace tcpshare::cli
