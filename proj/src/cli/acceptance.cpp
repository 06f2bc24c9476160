#include "tcpshare/cli.hpp"

#include "common.hpp"
#include "experiments.hpp"
#include "tcpshare/markov_chain.hpp"
#include "tcpshare/sim.hpp"
#include "tcpshare/stats.hpp"
#include "tcpshare/tcp_formulas.hpp"
#include "tcpshare/trace_store.hpp"

#include <chrono>
#include <cmath>
#include <map>

namespace tcpshare::cli {

namespace fs = std::filesystem;
using detail::mbps;

namespace {

using Clock = std::chrono::steady_clock;

bool within(double value, double target, double rel)
{
    return std::abs(value - target) <= rel * std::abs(target);
}

std::string pct_off(double value, double target)
{
    return fmt::format("{:+.1f}%", 100.0 * (value - target) / target);
}

struct Check {
    int id;
    const char* name;
    bool fidelity_sensitive;
    CheckResult (*run)(const VerifyOptions&);
};

// 1. equilibrium quantiles of the chain at the Reno operating point
CheckResult check_equilibrium(const VerifyOptions&)
{
    CheckResult r;
    const auto t0 = Clock::now();
    ChainSpec spec;
    spec.p_loss = 1.1e-4;
    spec.ack_ratio = 2.0;
    spec.rtt_s = 0.1;
    spec.mss_bytes = 1514.0;
    const DistributionStats s = distribution_stats(rate_distribution(solve_chain(spec)));
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const double tol = 0.05;
    r.passed = within(mbps(s.q05), 4.7, tol) && within(mbps(s.q50), 10.0, tol) && within(mbps(s.q95), 19.0, tol) &&
               within(mbps(s.mean), 10.7, tol) && secs < 5.0;
    r.measured = fmt::format("5/50/95% = {:.2f}/{:.2f}/{:.2f}, mean {:.2f} Mbit/s, {:.2f} s", mbps(s.q05), mbps(s.q50),
                             mbps(s.q95), mbps(s.mean), secs);
    r.expected = "4.7/10.0/19.0, mean 10.7 Mbit/s, each within 5%; < 5 s";
    return r;
}

// 2. Monte Carlo occupancy against the linear-algebra equilibrium
CheckResult check_monte_carlo(const VerifyOptions&)
{
    CheckResult r;
    const auto t0 = Clock::now();
    const ScenarioConfig cfg = make_random_drop(Flavor::Reno, 1.1e-4, 0.1, 43200.0, detail::kSeed, LossReaction::PerLoss);
    SimDiagnostics diag;
    run_random_drop(cfg, &diag);
    ChainSpec spec;
    spec.p_loss = cfg.p_loss;
    spec.ack_ratio = cfg.flows.front().tcp.ack_ratio;
    const double ks = detail::occupancy_ks(diag.cwnd_occupancy, solve_chain(spec));
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    r.passed = ks <= 0.01 && secs < 60.0;
    r.measured = fmt::format("KS {:.4f} over 12 h, seed {}, {:.1f} s", ks, cfg.seed, secs);
    r.expected = "KS <= 0.01; < 60 s";
    return r;
}

// 3. log-normal approximation across five decades of loss
CheckResult check_lognormal(const VerifyOptions& opt)
{
    CheckResult r;
    const auto t0 = Clock::now();
    r.passed = true;
    std::string parts;
    for (double p : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
        ChainSpec spec;
        spec.p_loss = p;
        spec.ack_ratio = 2.0;
        const double ks = ks_distance(solve_chain(spec), reno_expected_cwnd(p, 2.0), opt.sigma);
        r.passed = r.passed && ks <= 0.05;
        parts += fmt::format("{}{:g}: {:.3f}", parts.empty() ? "" : ", ", p, ks);
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    r.passed = r.passed && secs < 30.0;
    r.measured = fmt::format("KS {} (sigma {}), {:.1f} s", parts, opt.sigma, secs);
    r.expected = "KS <= 0.05 at every p_loss; < 30 s";
    return r;
}

// 4. loss probabilities that give 10 Mbit/s
CheckResult check_required_loss(const VerifyOptions&)
{
    CheckResult r;
    TcpParams reno{1514.0, 0.1, 2.0, Flavor::Reno};
    TcpParams cubic{1514.0, 0.1, 2.0, Flavor::Cubic};
    const double pr = reno_required_loss(10e6, reno);
    const double pc = cubic_required_loss(10e6, cubic);
    r.passed = within(pr, 1.1e-4, 0.05) && within(pc, 3.4e-4, 0.05);
    r.measured = fmt::format("Reno {:.3e} ({}), Cubic {:.3e} ({})", pr, pct_off(pr, 1.1e-4), pc, pct_off(pc, 3.4e-4));
    r.expected = "Reno 1.1e-4, Cubic 3.4e-4, each within 5%";
    return r;
}

// 5. two Reno flows on a shared bottleneck keep their spread
CheckResult check_sharing(const VerifyOptions&)
{
    CheckResult r;
    const auto t0 = Clock::now();
    const ScenarioConfig cfg = detail::shared_run(2, Flavor::Reno, 0.1, detail::kDeskMeasure);
    const RateTrace trace = run_shared_bottleneck(cfg);
    const SummaryStats s = summary(reaggregate(trace, 1.0, 0).samples_bps);
    double bits = 0.0;
    for (std::size_t f = 0; f < trace.flow_count(); ++f) {
        for (double x : reaggregate(trace, 1.0, f).samples_bps) bits += x;
    }
    const double util = bits / (cfg.link->capacity_bps * detail::kDeskMeasure);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool quantiles = within(mbps(s.q05), 5.0, 0.2) && within(mbps(s.q50), 10.0, 0.2) && within(mbps(s.q95), 15.0, 0.2);
    const bool spread = s.q05 <= 0.65 * s.mean && s.q95 >= 1.35 * s.mean;
    r.passed = quantiles && spread && util > 0.99 && secs < 600.0;
    r.measured = fmt::format("5/50/95% = {:.2f}/{:.2f}/{:.2f}, mean {:.2f} Mbit/s, q05/mean {:.2f}, q95/mean {:.2f}, "
                             "utilization {:.4f}, {:.1f} s",
                             mbps(s.q05), mbps(s.q50), mbps(s.q95), mbps(s.mean), s.q05 / s.mean, s.q95 / s.mean, util,
                             secs);
    r.expected = "5.0/10.0/15.0 within 20%; q05 <= 0.65 mean; q95 >= 1.35 mean; utilization > 0.99; < 10 min";
    return r;
}

// 6. averaging over longer intervals barely narrows random-drop rates
CheckResult check_slow_averaging(const VerifyOptions&)
{
    CheckResult r;
    const auto t0 = Clock::now();
    const ScenarioConfig cfg = detail::random_drop_run(Flavor::Reno, detail::kWarmup + detail::kFullMeasure);
    const RateTrace trace = run_random_drop(cfg);
    const std::vector<double> intervals{1.0, 16.0, 600.0};
    const auto curve = stddev_vs_interval(trace, intervals);
    const double ratio = curve[1].stddev_bps / curve[0].stddev_bps;
    const double sd600 = mbps(curve[2].stddev_bps);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    r.passed = ratio >= 0.8 && std::abs(sd600 - 1.0) <= 0.4 && secs < 120.0;
    r.measured = fmt::format("stddev(16 s)/stddev(1 s) {:.3f} {}, stddev(600 s) {:.3f} Mbit/s {}, {:.1f} s", ratio,
                             ratio >= 0.8 ? "ok" : "LOW", sd600, std::abs(sd600 - 1.0) <= 0.4 ? "ok" : "OUT", secs);
    r.expected = "ratio >= 0.8; stddev(600 s) = 1.0 +- 0.4 Mbit/s; < 2 min";
    return r;
}

// 7. mean time between losses from measured loss ratios
CheckResult check_sawtooth(const VerifyOptions&)
{
    CheckResult r;
    const double p[] = {3.3e-3, 4.0e-5, 2.8e-3, 2.5e-4};
    const double want[] = {0.37, 29.5, 0.42, 4.7};
    r.passed = true;
    std::string parts;
    for (int i = 0; i < 4; ++i) {
        const double t = sawtooth_interval(p[i], 10e6, 1514.0);
        r.passed = r.passed && within(t, want[i], 0.10);
        parts += fmt::format("{}{:.3g} s ({})", parts.empty() ? "" : ", ", t, pct_off(t, want[i]));
    }
    r.measured = parts;
    r.expected = "0.37, 29.5, 0.42, 4.7 s, each within 10%";
    return r;
}

// 8. shorter RTT shifts the convergence interval, less so for Cubic
CheckResult check_rtt_shift(const VerifyOptions& opt)
{
    CheckResult r;
    const auto t0 = Clock::now();
    struct Case {
        Flavor flavor;
        double rtt;
    };
    const std::vector<Case> cases{{Flavor::Reno, 0.1}, {Flavor::Reno, 0.01}, {Flavor::Cubic, 0.1}, {Flavor::Cubic, 0.01}};
    const auto conv = detail::parallel_map<std::optional<double>>(opt.jobs, cases.size(), [&](std::size_t i) {
        const RateTrace trace = run_shared_bottleneck(detail::shared_run(2, cases[i].flavor, cases[i].rtt, detail::kDeskMeasure));
        const auto intervals = default_intervals();
        return convergence_interval_50(stddev_vs_interval(trace, intervals));
    });
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    auto show = [](const std::optional<double>& v) { return v ? fmt::format("{:.1f} s", *v) : std::string("not reached"); };
    if (std::all_of(conv.begin(), conv.end(), [](const auto& v) { return v.has_value(); })) {
        const double reno = *conv[0] / *conv[1];
        const double cubic = *conv[2] / *conv[3];
        const bool reno_ok = reno >= 20.0 && reno <= 120.0;
        const bool cubic_ok = cubic < reno;
        r.passed = reno_ok && cubic_ok && secs < 1800.0;
        r.measured = fmt::format("Reno {} -> {} (x{:.1f} {}), Cubic {} -> {} (x{:.1f} {}), {:.0f} s", show(conv[0]),
                                 show(conv[1]), reno, reno_ok ? "ok" : "OUT", show(conv[2]), show(conv[3]), cubic,
                                 cubic_ok ? "ok" : "NOT SMALLER", secs);
    } else {
        r.passed = false;
        r.measured = fmt::format("Reno {} / {}, Cubic {} / {}", show(conv[0]), show(conv[1]), show(conv[2]), show(conv[3]));
    }
    r.expected = "Reno factor 100 ms/10 ms in [20, 120]; Cubic factor < Reno factor; < 30 min";
    return r;
}

// 9. completion times of a 12 MB flow among nine long-lived flows
CheckResult check_completion(const VerifyOptions&)
{
    CheckResult r;
    const auto t0 = Clock::now();
    const FiniteFlowResult res = run_finite_flow(detail::finite_run(Flavor::Cubic, detail::kDeskRepetitions));
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (res.completion_s.empty()) {
        r.measured = "no repetition completed";
    } else {
        const SummaryStats s = summary(res.completion_s);
        const bool med = within(s.q50, 10.0, 0.2);
        r.passed = med && s.q05 <= 9.0 && s.q95 >= 18.0 && res.completion_s.size() == detail::kDeskRepetitions &&
                   secs < 900.0;
        r.measured = fmt::format("{} runs (Cubic): median {:.2f} s {}, 5% {:.2f} s {}, 95% {:.2f} s {}, {:.0f} s",
                                 res.completion_s.size(), s.q50, med ? "ok" : "OUT", s.q05, s.q05 <= 9.0 ? "ok" : "OUT",
                                 s.q95, s.q95 >= 18.0 ? "ok" : "OUT", secs);
    }
    r.expected = "median 10 s within 20%; 5% <= 9 s; 95% >= 18 s; < 15 min";
    return r;
}

// 10. engine and solver invariants
CheckResult check_properties(const VerifyOptions&)
{
    CheckResult r;
    const auto t0 = Clock::now();
    std::vector<std::string> failed;

    // determinism
    const ScenarioConfig rd = detail::random_drop_run(Flavor::Reno, 3600.0);
    if (!(run_random_drop(rd) == run_random_drop(rd))) failed.push_back("random-drop determinism");
    ScenarioConfig sh = detail::shared_run(2, Flavor::Cubic, 0.1, 300.0);
    SimDiagnostics diag;
    const RateTrace shared = run_shared_bottleneck(sh, &diag);
    if (!(shared == run_shared_bottleneck(sh))) failed.push_back("shared determinism");

    // conservation
    ScenarioConfig fin = detail::finite_run(Flavor::Reno, 5);
    SimDiagnostics fin_diag;
    const FiniteFlowResult finite = run_finite_flow(fin, &fin_diag);
    for (const RateTrace* t : {&shared, &finite.trace}) {
        for (const FlowCounters& c : t->counters) {
            if (c.sent != c.delivered + c.dropped + c.in_flight_at_end) {
                failed.push_back("conservation");
                break;
            }
        }
    }
    const RateTrace rd_trace = run_random_drop(rd);
    for (const FlowCounters& c : rd_trace.counters) {
        if (c.sent != c.delivered + c.dropped + c.in_flight_at_end) failed.push_back("random-drop conservation");
    }

    // queue bounds and causality
    for (const auto& [d, cfg] : {std::pair{&diag, &sh}, std::pair{&fin_diag, &fin}}) {
        const LinkSpec& link = *cfg->link;
        if (d->max_queue_bytes > link.buffer_bytes || d->drops_with_space != 0) failed.push_back("queue bound");
        if (d->causality_violations != 0 || !d->time_monotone) failed.push_back("causality");
        if (d->min_rtt_s < link.base_rtt_s - 1e-9 || d->max_rtt_s > link.base_rtt_s + link.max_queue_delay_s() + 1e-6) {
            failed.push_back("rtt bound");
        }
    }

    // equilibrium balance
    double worst = 0.0;
    for (double p : {1e-5, 1.1e-4, 1e-3, 1e-2, 1e-1}) {
        ChainSpec spec;
        spec.p_loss = p;
        const TransitionMatrix m = build_transition_matrix(spec);
        worst = std::max(worst, balance_residual(m, solve_equilibrium(m)));
    }
    if (worst > 1e-10) failed.push_back("flow balance");

    // truncation insensitivity
    ChainSpec base;
    base.p_loss = 1.1e-4;
    const StateDistribution d1 = solve_chain(base);
    ChainSpec doubled = d1.spec;
    doubled.cwnd_max *= 2;
    const DistributionStats a = distribution_stats(rate_distribution(d1));
    const DistributionStats b = distribution_stats(rate_distribution(solve_chain(doubled)));
    double trunc = 0.0;
    for (auto [x, y] : {std::pair{a.q05, b.q05}, {a.q50, b.q50}, {a.q95, b.q95}, {a.mean, b.mean}}) {
        trunc = std::max(trunc, std::abs(x - y) / x);
    }
    if (trunc >= 1e-3) failed.push_back("truncation");

    // trace round trip
    const fs::path dir = fs::temp_directory_path() / fmt::format("tcpshare-verify-{}", content_id(config_to_json(sh)));
    const RunRecord rec = write_trace(shared, dir);
    if (!(read_trace(rec.trace_csv) == shared)) failed.push_back("round trip");
    std::error_code ec;
    fs::remove_all(dir, ec);

    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    r.passed = failed.empty() && secs < 60.0;
    std::string list;
    for (const auto& f : failed) list += (list.empty() ? "" : ", ") + f;
    r.measured = fmt::format("{}; residual {:.1e}, truncation shift {:.1e}, {:.1f} s",
                             failed.empty() ? "all hold" : "FAILED: " + list, worst, trunc, secs);
    r.expected = "determinism, conservation, queue bound, causality, residual <= 1e-10, truncation < 0.1%, round trip; < 60 s";
    return r;
}

const std::vector<Check>& checks()
{
    static const std::vector<Check> all{
        {1, "equilibrium rate quantiles", false, check_equilibrium},
        {2, "Monte Carlo vs chain occupancy", false, check_monte_carlo},
        {3, "log-normal approximation", false, check_lognormal},
        {4, "response-function loss targets", false, check_required_loss},
        {5, "two-flow sharing spread", true, check_sharing},
        {6, "slow averaging of random-drop rates", false, check_slow_averaging},
        {7, "sawtooth interval", false, check_sawtooth},
        {8, "RTT shift of the convergence interval", true, check_rtt_shift},
        {9, "finite-flow completion spread", true, check_completion},
        {10, "property suite", false, check_properties},
    };
    return all;
}

} // namespace

bool is_quick_check(int id)
{
    return id != 5 && id != 8 && id != 9;
}

std::vector<CheckResult> run_acceptance(const VerifyOptions& opt, std::ostream& log)
{
    if (!(opt.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    for (int id : opt.only) {
        if (id < 1 || id > static_cast<int>(checks().size())) throw std::invalid_argument(fmt::format("no check {}", id));
    }
    std::vector<CheckResult> results;
    for (const Check& c : checks()) {
        if (!opt.only.empty() && opt.only.count(c.id) == 0) continue;
        if (opt.quick && !is_quick_check(c.id)) continue;
        const auto t0 = Clock::now();
        CheckResult r;
        try {
            r = c.run(opt);
        } catch (const std::exception& e) {
            r.passed = false;
            r.measured = std::string("error: ") + e.what();
        }
        r.id = c.id;
        r.name = c.name;
        r.fidelity_sensitive = c.fidelity_sensitive;
        r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        log << format_check(r) << std::endl;
        results.push_back(std::move(r));
    }
    return results;
}

std::string format_check(const CheckResult& r)
{
    return fmt::format("[{}] {:>2}. {}{}\n        measured: {}\n        expected: {}", r.passed ? "PASS" : "FAIL", r.id,
                       r.name, r.fidelity_sensitive ? " (fidelity-sensitive)" : "", r.measured, r.expected);
}

int cmd_verify(const VerifyOptions& opt, std::ostream& out)
{
    const auto results = run_acceptance(opt, out);
    const auto passed = std::count_if(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
    out << fmt::format("{} of {} checks passed\n", passed, results.size());
    return passed == static_cast<std::ptrdiff_t>(results.size()) ? kOk : kVerifyFailed;
}

} // namespace tcpshare::cli
