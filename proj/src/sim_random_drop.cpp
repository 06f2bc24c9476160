#include "tcpshare/sim.hpp"

#include "tcpshare/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace tcpshare {

namespace {

std::int64_t to_ns(double s)
{
    return std::llround(s * 1e9);
}

} // namespace

RateTrace run_random_drop(const ScenarioConfig& cfg, SimDiagnostics* diag)
{
    cfg.validate();
    if (cfg.scenario != Scenario::RandomDrop) {
        throw std::invalid_argument("run_random_drop needs a random-drop scenario");
    }
    const FlowConfig& flow = cfg.flows.front();
    const int ack_ratio = ack_events_ratio(flow.tcp);
    const auto mss = static_cast<std::uint64_t>(std::llround(flow.tcp.mss_bytes));
    const bool per_window = cfg.loss_reaction == LossReaction::PerWindow;

    const std::size_t n_intervals = cfg.interval_count();
    const std::int64_t interval_ns = to_ns(cfg.interval_s);
    const std::int64_t end_ns = interval_ns * static_cast<std::int64_t>(n_intervals);
    const std::int64_t rtt_ns = to_ns(flow.tcp.rtt_s);
    const std::int64_t warmup_ns = to_ns(cfg.warmup_s);

    RateTrace trace;
    trace.interval_s = cfg.interval_s;
    trace.config = cfg;
    trace.bytes.assign(1, std::vector<std::uint64_t>(n_intervals, 0));
    trace.counters.assign(1, FlowCounters{});
    FlowCounters& c = trace.counters.front();
    auto& bytes = trace.bytes.front();

    Rng rng(cfg.seed, 0);
    FlowState state = initial_state(flow, 0.0, false);
    std::int64_t last_t = 0;

    for (std::int64_t round_start = 0; round_start < end_ns; round_start += rtt_ns) {
        const auto window = static_cast<std::int64_t>(std::floor(state.cwnd));
        bool reduced = false;
        for (std::int64_t k = 0; k < window; ++k) {
            // packets of one round are spread evenly over the RTT
            const std::int64_t t = round_start + rtt_ns * k / window;
            if (t >= end_ns) break;
            const std::int64_t slot = round_start + rtt_ns * (k + 1) / window - t;
            const double now_s = static_cast<double>(t) * 1e-9;
            if (diag) {
                ++diag->events;
                if (t < last_t) diag->time_monotone = false;
                if (t >= warmup_ns) {
                    const auto idx = static_cast<std::size_t>(state.cwnd);
                    if (diag->cwnd_occupancy.size() <= idx) diag->cwnd_occupancy.resize(idx + 1, 0.0);
                    diag->cwnd_occupancy[idx] += static_cast<double>(slot) * 1e-9;
                }
            }
            last_t = t;

            ++c.sent;
            if (rng.uniform() < cfg.p_loss) {
                ++c.dropped;
                if (!per_window || !reduced) {
                    on_loss(state, flow, now_s);
                    ++c.window_reductions;
                    reduced = true;
                }
                continue;
            }
            ++c.delivered;
            bytes[static_cast<std::size_t>(t / interval_ns)] += mss;
            c.delivered_bytes += mss;
            state.bytes_delivered += mss;
            if (flow.flavor() == Flavor::Reno) {
                reno_on_ack(state, 1, ack_ratio);
            } else {
                cubic_on_ack(state, 1, ack_ratio, now_s);
            }
        }
    }
    return trace;
}

LossRatios measured_loss_ratio(const RateTrace& trace)
{
    LossRatios r;
    std::uint64_t sent = 0;
    std::uint64_t dropped = 0;
    for (const auto& c : trace.counters) {
        r.per_flow.push_back(c.loss_ratio());
        sent += c.sent;
        dropped += c.dropped;
    }
    r.aggregate = sent ? static_cast<double>(dropped) / static_cast<double>(sent) : 0.0;
    return r;
}

RateTrace run_scenario(const ScenarioConfig& cfg, SimDiagnostics* diag)
{
    switch (cfg.scenario) {
    case Scenario::RandomDrop: return run_random_drop(cfg, diag);
    case Scenario::SharedBottleneck: return run_shared_bottleneck(cfg, diag);
    case Scenario::FiniteFlow: return run_finite_flow(cfg, diag).trace;
    }
    throw std::invalid_argument("unknown scenario");
}

} // namespace tcpshare
