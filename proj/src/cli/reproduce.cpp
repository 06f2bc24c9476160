#include "tcpshare/cli.hpp"

#include "common.hpp"
#include "experiments.hpp"
#include "tcpshare/sim.hpp"
#include "tcpshare/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace tcpshare::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using detail::mbps;

namespace {

constexpr double kBinWidth = 0.5e6;

struct Context {
    const ReproduceOptions& opt;
    fs::path dir;
    std::ostream& out;

    double measure_s() const { return detail::measured_span(opt.full); }
    int repetitions() const { return opt.full ? detail::kFullRepetitions : detail::kDeskRepetitions; }
    void write(const std::string& name, const std::string& content) const
    {
        detail::write_file(dir / name, content);
        out << "wrote " << (dir / name).string() << "\n";
    }
    void write_json(const std::string& name, const json& j) const
    {
        detail::write_json(dir / name, j);
        out << "wrote " << (dir / name).string() << "\n";
    }
};

std::string flavor_name(Flavor f)
{
    return std::string(to_string(f));
}

json stats_json(const SummaryStats& s)
{
    return json{{"q05_mbps", mbps(s.q05)}, {"q50_mbps", mbps(s.q50)}, {"q95_mbps", mbps(s.q95)}, {"mean_mbps", mbps(s.mean)}};
}

json reference_row(double q05, double q50, double q95, double mean)
{
    return json{{"q05_mbps", q05}, {"q50_mbps", q50}, {"q95_mbps", q95}, {"mean_mbps", mean}};
}

std::string histogram_dat(const std::vector<double>& samples_bps, const std::string& title)
{
    const Histogram h = histogram(samples_bps, kBinWidth);
    std::string s = fmt::format("# {}\n# rate_mbps density_per_mbps\n", title);
    for (std::size_t k = 0; k < h.density.size(); ++k) {
        s += fmt::format("{:.3f} {:.6g}\n", mbps(h.bin_center(k)), h.density[k] * 1e6);
    }
    return s;
}

/// Chain rate PMF folded into the same bins as the simulated histograms.
std::string theory_dat(Flavor flavor)
{
    (void)flavor;
    ChainSpec spec;
    spec.p_loss = detail::operating_loss(Flavor::Reno);
    const DiscretePmf pmf = rate_distribution(solve_chain(spec));
    std::map<long, double> bins;
    for (std::size_t i = 0; i < pmf.support.size(); ++i) {
        bins[static_cast<long>(std::floor(pmf.support[i] / kBinWidth))] += pmf.mass[i];
    }
    std::string s = "# chain equilibrium, Reno at its 10 Mbit/s loss probability\n# rate_mbps density_per_mbps\n";
    for (const auto& [k, m] : bins) {
        s += fmt::format("{:.3f} {:.6g}\n", mbps((static_cast<double>(k) + 0.5) * kBinWidth), m / mbps(kBinWidth));
    }
    return s;
}

std::string curve_dat(const std::vector<CurvePoint>& curve, const std::string& title)
{
    std::string s = fmt::format("# {}\n# interval_s stddev_mbps stddev_relative_to_first\n", title);
    for (const auto& p : curve) {
        s += fmt::format("{:g} {:.6g} {:.6g}\n", p.interval_s, mbps(p.stddev_bps), p.stddev_bps / curve.front().stddev_bps);
    }
    return s;
}

struct SharedCase {
    int flows;
    Flavor flavor;
    double rtt;
};

std::vector<RateTrace> run_shared_cases(const Context& ctx, const std::vector<SharedCase>& cases)
{
    return detail::parallel_map<RateTrace>(ctx.opt.jobs, cases.size(), [&](std::size_t i) {
        return run_shared_bottleneck(detail::shared_run(cases[i].flows, cases[i].flavor, cases[i].rtt, ctx.measure_s()));
    });
}

std::vector<RateTrace> run_random_drop_cases(const Context& ctx)
{
    const std::vector<Flavor> flavors{Flavor::Reno, Flavor::Cubic};
    return detail::parallel_map<RateTrace>(ctx.opt.jobs, flavors.size(), [&](std::size_t i) {
        return run_random_drop(detail::random_drop_run(flavors[i], detail::kWarmup + ctx.measure_s()));
    });
}

const std::vector<SharedCase>& sharing_cases()
{
    static const std::vector<SharedCase> cases{{2, Flavor::Reno, 0.1},  {3, Flavor::Reno, 0.1},  {10, Flavor::Reno, 0.1},
                                               {2, Flavor::Cubic, 0.1}, {3, Flavor::Cubic, 0.1}, {10, Flavor::Cubic, 0.1}};
    return cases;
}

// published reference values, Mbit/s: 5%, 50%, 95%, mean
const std::map<std::string, std::array<double, 4>>& table1_reference()
{
    static const std::map<std::string, std::array<double, 4>> ref{
        {"reno random drop (numeric)", {4.7, 10.0, 19.0, 10.7}},
        {"reno random drop (experiment)", {4.9, 10.0, 18.7, 10.7}},
        {"reno 1 of 2 flows", {5.0, 10.0, 15.0, 10.0}},
        {"reno 1 of 3 flows", {4.7, 9.6, 16.0, 9.9}},
        {"reno 1 of 10 flows", {4.5, 8.9, 16.6, 9.5}},
        {"cubic random drop (experiment)", {5.0, 9.4, 20.0, 10.6}},
        {"cubic 1 of 2 flows", {6.5, 10.0, 13.6, 10.0}},
        {"cubic 1 of 3 flows", {6.3, 9.8, 14.6, 10.0}},
        {"cubic 1 of 10 flows", {6.1, 9.8, 16.0, 10.3}},
    };
    return ref;
}

std::string case_name(const SharedCase& c)
{
    return fmt::format("{} 1 of {} flows", flavor_name(c.flavor), c.flows);
}

// ----------------------------------------------------------------- fig2

void fig2(const Context& ctx)
{
    const auto traces = run_random_drop_cases(ctx);
    ctx.write("fig2_theory.dat", theory_dat(Flavor::Reno));
    json cmp = json::object();
    const auto& ref = table1_reference();
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const Flavor f = i == 0 ? Flavor::Reno : Flavor::Cubic;
        const auto samples = reaggregate(traces[i], 1.0).samples_bps;
        ctx.write(fmt::format("fig2_{}.dat", flavor_name(f)),
                  histogram_dat(samples, fmt::format("{} random drop, 1 s rates", flavor_name(f))));
        const std::string key = flavor_name(f) + " random drop (experiment)";
        const auto& p = ref.at(key);
        cmp[key] = {{"simulated", stats_json(summary(samples))}, {"reference", reference_row(p[0], p[1], p[2], p[3])}};
    }
    ctx.write_json("fig2.comparison.json", cmp);
}

// ----------------------------------------------------------------- fig3

void fig3(const Context& ctx)
{
    json cmp = json::object();
    for (double p : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
        ChainSpec spec;
        spec.p_loss = p;
        const StateDistribution d = solve_chain(spec);
        const double e = reno_expected_cwnd(p, spec.ack_ratio);
        std::string s = fmt::format("# p_loss {:g}, E[cwnd] {:.3f}\n# cwnd chain_cdf lognormal_cdf\n", p, e);
        double cdf = 0.0;
        for (int i = d.first_state(); i <= d.last_state(); ++i) {
            cdf += d.at(i);
            const double x = i + 1;
            s += fmt::format("{} {:.6g} {:.6g}\n", x, std::min(1.0, cdf), lognormal_cdf(x, e, kLognormalSigma));
            if (cdf > 1.0 - 1e-9 && x > 4.0 * e) break;
        }
        ctx.write(fmt::format("fig3_p{:g}.dat", p), s);
        cmp[fmt::format("{:g}", p)] = {{"expected_cwnd", e},
                                       {"chain_mean_cwnd", d.mean_cwnd()},
                                       {"cwnd_max", d.spec.cwnd_max},
                                       {"ks_to_lognormal", ks_distance(d, e, kLognormalSigma)},
                                       {"sigma", kLognormalSigma}};
    }
    ctx.write_json("fig3.comparison.json", cmp);
}

// ----------------------------------------------------------------- fig4

void fig4(const Context& ctx)
{
    const auto& cases = sharing_cases();
    const auto traces = run_shared_cases(ctx, cases);
    ctx.write("fig4_theory.dat", theory_dat(Flavor::Reno));
    json cmp = json::object();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto samples = reaggregate(traces[i], 1.0).samples_bps;
        const std::string name = case_name(cases[i]);
        ctx.write(fmt::format("fig4_{}_{}flows.dat", flavor_name(cases[i].flavor), cases[i].flows),
                  histogram_dat(samples, name + ", 1 s rates of flow 0"));
        const auto& p = table1_reference().at(name);
        cmp[name] = {{"simulated", stats_json(summary(samples))}, {"reference", reference_row(p[0], p[1], p[2], p[3])}};
    }
    ctx.write_json("fig4.comparison.json", cmp);
}

// ----------------------------------------------------------------- fig5

void fig5(const Context& ctx)
{
    const auto intervals = default_intervals();
    const auto rd = run_random_drop_cases(ctx);
    json cmp = json::object();
    for (std::size_t i = 0; i < rd.size(); ++i) {
        const Flavor f = i == 0 ? Flavor::Reno : Flavor::Cubic;
        const auto curve = stddev_vs_interval(rd[i], intervals);
        ctx.write(fmt::format("fig5_{}_random_drop.dat", flavor_name(f)),
                  curve_dat(curve, flavor_name(f) + " random drop"));
        if (f == Flavor::Reno) {
            cmp["reno random drop"] = {{"stddev_16s_over_1s", curve[2].stddev_bps / curve[0].stddev_bps},
                                       {"stddev_600s_mbps", mbps(curve.back().stddev_bps)},
                                       {"reference", {{"stddev_16s_over_1s", ">= 0.8"}, {"stddev_600s_mbps", 1.0}}}};
        }
    }
    const auto& cases = sharing_cases();
    const auto traces = run_shared_cases(ctx, cases);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto curve = stddev_vs_interval(traces[i], intervals);
        ctx.write(fmt::format("fig5_{}_{}flows.dat", flavor_name(cases[i].flavor), cases[i].flows),
                  curve_dat(curve, case_name(cases[i])));
        const auto conv = convergence_interval_50(curve);
        cmp[case_name(cases[i])] = {{"stddev_1s_mbps", mbps(curve.front().stddev_bps)},
                                    {"stddev_600s_mbps", mbps(curve.back().stddev_bps)},
                                    {"convergence_interval_50_s", conv ? json(*conv) : json(nullptr)}};
    }
    ctx.write_json("fig5.comparison.json", cmp);
}

// ------------------------------------------------------- fig6 and table2

struct RttRow {
    SharedCase c;
    double theory_loss;
    double measured_loss;
    double mean_bps;
    double sawtooth_s;
    std::optional<double> conv;
    std::vector<CurvePoint> curve;
};

std::vector<RttRow> rtt_rows(const Context& ctx)
{
    const std::vector<SharedCase> cases{{2, Flavor::Reno, 0.01}, {2, Flavor::Reno, 0.1}, {2, Flavor::Cubic, 0.01}, {2, Flavor::Cubic, 0.1}};
    const auto traces = run_shared_cases(ctx, cases);
    const auto intervals = default_intervals();
    std::vector<RttRow> rows;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        RttRow r;
        r.c = cases[i];
        r.theory_loss = detail::operating_loss(cases[i].flavor, cases[i].rtt);
        r.measured_loss = measured_loss_ratio(traces[i]).aggregate;
        r.mean_bps = summary(reaggregate(traces[i], 1.0).samples_bps).mean;
        r.sawtooth_s = sawtooth_interval(r.measured_loss, r.mean_bps, traces[i].config.flows.front().tcp.mss_bytes);
        r.curve = stddev_vs_interval(traces[i], intervals);
        r.conv = convergence_interval_50(r.curve);
        rows.push_back(std::move(r));
    }
    return rows;
}

json conv_json(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

void fig6(const Context& ctx)
{
    const auto rows = rtt_rows(ctx);
    json cmp = json::object();
    for (const auto& r : rows) {
        const std::string name = fmt::format("{} {:g} ms", flavor_name(r.c.flavor), r.c.rtt * 1e3);
        ctx.write(fmt::format("fig6_{}_{:g}ms.dat", flavor_name(r.c.flavor), r.c.rtt * 1e3), curve_dat(r.curve, name));
        cmp[name] = {{"convergence_interval_50_s", conv_json(r.conv)}};
    }
    auto shift = [&](std::size_t slow, std::size_t fast) {
        return rows[slow].conv && rows[fast].conv ? json(*rows[slow].conv / *rows[fast].conv) : json(nullptr);
    };
    cmp["shift_factor"] = {{"reno", shift(1, 0)}, {"cubic", shift(3, 2)}, {"reference", {{"reno", 60}, {"cubic", 15}}}};
    ctx.write_json("fig6.comparison.json", cmp);
}

void table2(const Context& ctx)
{
    const auto rows = rtt_rows(ctx);
    // theory loss, measured loss, sawtooth s, convergence s
    const std::array<std::array<double, 4>, 4> ref{{{3.8e-3, 3.3e-3, 0.37, 4.0},
                                                      {3.8e-5, 4.0e-5, 29.5, 220.0},
                                                      {6.2e-4, 2.8e-3, 0.42, 9.5},
                                                      {2.9e-4, 2.5e-4, 4.7, 130.0}}};
    std::string dat = "# flavor rtt_ms loss_theory loss_measured sawtooth_s convergence50_s ratio | reference: loss_theory "
                      "loss_measured sawtooth_s convergence50_s\n";
    json cmp = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double ratio = r.conv ? *r.conv / r.sawtooth_s : std::nan("");
        dat += fmt::format("{:<6} {:>4g} {:>9.2e} {:>9.2e} {:>8.3g} {:>8} {:>6.3g} | {:>8.1e} {:>8.1e} {:>6g} {:>6g}\n",
                           flavor_name(r.c.flavor), r.c.rtt * 1e3, r.theory_loss, r.measured_loss, r.sawtooth_s,
                           r.conv ? fmt::format("{:.3g}", *r.conv) : std::string("-"), ratio, ref[i][0], ref[i][1],
                           ref[i][2], ref[i][3]);
        cmp.push_back({{"flavor", flavor_name(r.c.flavor)},
                       {"rtt_s", r.c.rtt},
                       {"loss_theory_plain", r.theory_loss},
                       {"loss_measured", r.measured_loss},
                       {"sawtooth_interval_s", r.sawtooth_s},
                       {"convergence_interval_50_s", conv_json(r.conv)},
                       {"reference",
                        {{"loss_theory", ref[i][0]},
                         {"loss_measured", ref[i][1]},
                         {"sawtooth_interval_s", ref[i][2]},
                         {"convergence_interval_50_s", ref[i][3]}}}});
    }
    ctx.write("table2.dat", dat);
    ctx.write_json("table2.comparison.json", cmp);
    ctx.out << dat;
}

// ----------------------------------------------------------------- fig7

void fig7(const Context& ctx)
{
    const auto traces = run_shared_cases(ctx, {{2, Flavor::Cubic, 0.1}});
    const RateTrace& t = traces.front();
    const std::size_t n = t.interval_count();
    const std::size_t first = n > 600 ? n - 600 : 0;
    std::string s = "# last 10 minutes, two Cubic flows, 100 ms, 20 Mbit/s\n# t_s flow0_mbps flow1_mbps sum_mbps\n";
    double worst_gap = 0.0;
    for (std::size_t k = first; k < n; ++k) {
        const double a = static_cast<double>(t.bytes[0][k]) * 8.0 / t.interval_s;
        const double b = static_cast<double>(t.bytes[1][k]) * 8.0 / t.interval_s;
        worst_gap = std::max(worst_gap, std::abs(a + b - t.config.link->capacity_bps) / t.config.link->capacity_bps);
        s += fmt::format("{} {:.4f} {:.4f} {:.4f}\n", static_cast<double>(k + 1) * t.interval_s, mbps(a), mbps(b), mbps(a + b));
    }
    ctx.write("fig7.dat", s);
    ctx.write_json("fig7.comparison.json", {{"largest_relative_gap_of_sum_to_capacity", worst_gap},
                                             {"expected", "per-second sum within 2% of capacity"}});
}

// ----------------------------------------------------------------- fig8

void fig8(const Context& ctx)
{
    const FiniteFlowResult res = run_finite_flow(detail::finite_run(Flavor::Cubic, ctx.repetitions()));
    std::vector<double> sorted = res.completion_s;
    std::sort(sorted.begin(), sorted.end());
    std::string cdf = "# completion time of a 12 MB Cubic flow among 9 long-lived flows, 100 Mbit/s\n# completion_s cdf\n";
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cdf += fmt::format("{:.4f} {:.6g}\n", sorted[i], static_cast<double>(i + 1) / static_cast<double>(sorted.size()));
    }
    ctx.write("fig8_cdf.dat", cdf);

    // four shots: cumulative volume against time since start, one gnuplot block each
    const RateTrace& t = res.trace;
    const std::size_t finite = t.flow_count() - 1;
    std::string shots = "# t_since_start_s cumulative_mbyte, one block per shot\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(4, res.start_s.size()); ++i) {
        const auto k0 = static_cast<std::size_t>(std::floor(res.start_s[i] / t.interval_s));
        const auto k1 = static_cast<std::size_t>(std::ceil((res.start_s[i] + res.completion_s[i]) / t.interval_s));
        double cum = 0.0;
        shots += fmt::format("# shot {} completed in {:.2f} s\n0 0\n", i + 1, res.completion_s[i]);
        for (std::size_t k = k0; k < std::min(k1, t.interval_count()); ++k) {
            cum += static_cast<double>(t.bytes[finite][k]);
            shots += fmt::format("{:g} {:.4f}\n", static_cast<double>(k + 1) * t.interval_s - res.start_s[i], cum / 1e6);
        }
        shots += "\n\n";
    }
    ctx.write("fig8_shots.dat", shots);
    json cmp{{"repetitions", res.completion_s.size()}, {"reference", {{"repetitions", 2500}, {"q05_s", "< 8"}, {"q95_s", "> 22"}, {"expected_s", 10}}}};
    if (!res.completion_s.empty()) {
        const SummaryStats s = summary(res.completion_s);
        cmp["simulated"] = {{"q05_s", s.q05}, {"q50_s", s.q50}, {"q95_s", s.q95}, {"mean_s", s.mean}};
        ctx.out << fmt::format("completion s  5%: {:.2f}  50%: {:.2f}  95%: {:.2f}\n", s.q05, s.q50, s.q95);
    }
    ctx.write_json("fig8.comparison.json", cmp);
}

// --------------------------------------------------------------- table1

void table1(const Context& ctx)
{
    std::vector<std::pair<std::string, SummaryStats>> rows;
    {
        ChainSpec spec;
        spec.p_loss = detail::operating_loss(Flavor::Reno);
        const DistributionStats d = distribution_stats(rate_distribution(solve_chain(spec)));
        rows.emplace_back("reno random drop (numeric)", SummaryStats{d.mean, d.stddev, d.q05, d.q50, d.q95});
    }
    const auto rd = run_random_drop_cases(ctx);
    rows.emplace_back("reno random drop (experiment)", summary(reaggregate(rd[0], 1.0).samples_bps));
    rows.emplace_back("cubic random drop (experiment)", summary(reaggregate(rd[1], 1.0).samples_bps));
    const auto& cases = sharing_cases();
    const auto traces = run_shared_cases(ctx, cases);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        rows.emplace_back(case_name(cases[i]), summary(reaggregate(traces[i], 1.0).samples_bps));
    }

    std::string dat = fmt::format("# {:<31} {:>6} {:>6} {:>6} {:>6} | {:>6} {:>6} {:>6} {:>6}\n", "row (Mbit/s)", "q05",
                                  "q50", "q95", "mean", "p.q05", "p.q50", "p.q95", "p.mean");
    json cmp = json::object();
    for (const auto& [name, s] : rows) {
        const auto& p = table1_reference().at(name);
        dat += fmt::format("{:<33} {:>6.2f} {:>6.2f} {:>6.2f} {:>6.2f} | {:>6.1f} {:>6.1f} {:>6.1f} {:>6.1f}\n", name,
                           mbps(s.q05), mbps(s.q50), mbps(s.q95), mbps(s.mean), p[0], p[1], p[2], p[3]);
        cmp[name] = {{"simulated", stats_json(s)}, {"reference", reference_row(p[0], p[1], p[2], p[3])}};
    }
    ctx.write("table1.dat", dat);
    ctx.write_json("table1.comparison.json", cmp);
    ctx.out << dat;
}

using Target = void (*)(const Context&);

const std::map<std::string, Target>& target_map()
{
    static const std::map<std::string, Target> m{{"fig2", fig2}, {"fig3", fig3}, {"fig4", fig4},   {"fig5", fig5},
                                                 {"fig6", fig6}, {"fig7", fig7}, {"fig8", fig8},   {"table1", table1},
                                                 {"table2", table2}};
    return m;
}

} // namespace

const std::vector<std::string>& reproduce_targets()
{
    static const std::vector<std::string> names{"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "table1", "table2"};
    return names;
}

int cmd_reproduce(const ReproduceOptions& opt, std::ostream& out)
{
    const auto it = target_map().find(opt.target);
    if (it == target_map().end()) {
        std::string known;
        for (const auto& n : reproduce_targets()) known += " " + n;
        throw std::invalid_argument("unknown target '" + opt.target + "'; known:" + known);
    }
    if (opt.full) {
        out << "full scale: 12 h per long-lived run after 300 s warm-up, 2500 finite-flow repetitions\n";
    } else {
        out << "desk scale: 2 h per long-lived run after 300 s warm-up (full: 12 h), 500 finite-flow repetitions "
               "(full: 2500); pass --full for full scale\n";
    }
    Context ctx{opt, opt.out_dir / opt.target, out};
    it->second(ctx);
    return kOk;
}

} // namespace tcpshare::cli
