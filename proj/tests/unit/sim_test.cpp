#include "doctest.h"

#include "tcpshare/sim.hpp"
#include "tcpshare/stats.hpp"

#include <cmath>
#include <stdexcept>

using namespace tcpshare;

namespace {

void check_conservation(const RateTrace& t)
{
    for (const auto& c : t.counters) {
        CHECK(c.delivered + c.dropped + c.in_flight_at_end == c.sent);
    }
}

std::uint64_t total_bytes(const RateTrace& t, std::size_t flow, std::size_t from = 0)
{
    std::uint64_t sum = 0;
    for (std::size_t k = from; k < t.interval_count(); ++k) sum += t.bytes[flow][k];
    return sum;
}

} // namespace

TEST_CASE("random drop: determinism and conservation")
{
    const ScenarioConfig cfg = make_random_drop(Flavor::Reno, 1e-3, 0.1, 600, 3);
    const RateTrace a = run_random_drop(cfg);
    const RateTrace b = run_random_drop(cfg);
    CHECK(a == b);
    check_conservation(a);
    CHECK(a.interval_count() == 600);

    ScenarioConfig other = cfg;
    other.seed = 4;
    CHECK_FALSE(run_random_drop(other).bytes == a.bytes);
}

TEST_CASE("random drop: measured loss near configured probability")
{
    const double p = 1e-3;
    const RateTrace t = run_random_drop(make_random_drop(Flavor::Reno, p, 0.1, 3600, 5));
    const auto& c = t.counters.front();
    const double n = static_cast<double>(c.sent);
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(c.loss_ratio() - p) < 3 * sigma);
    CHECK(measured_loss_ratio(t).aggregate == doctest::Approx(c.loss_ratio()));
}

TEST_CASE("random drop: lossless flow grows steadily")
{
    ScenarioConfig cfg = make_random_drop(Flavor::Reno, 1e-3, 0.1, 100, 1);
    cfg.p_loss = 0.0;
    cfg.warmup_s = 0.0;
    cfg.flows[0].initial_cwnd = 10;
    const RateTrace t = run_random_drop(cfg);
    CHECK(t.counters[0].window_reductions == 0);
    for (std::size_t k = 1; k < t.interval_count(); ++k) CHECK(t.bytes[0][k] >= t.bytes[0][k - 1]);
}

TEST_CASE("random drop: per-window mode reacts at most once per window")
{
    const ScenarioConfig per_loss = make_random_drop(Flavor::Reno, 1e-2, 0.1, 1200, 9, LossReaction::PerLoss);
    ScenarioConfig per_window = per_loss;
    per_window.loss_reaction = LossReaction::PerWindow;
    const auto a = run_random_drop(per_loss).counters[0];
    const auto b = run_random_drop(per_window).counters[0];
    CHECK(a.window_reductions == a.dropped);
    CHECK(b.window_reductions < b.dropped);
}

TEST_CASE("shared bottleneck: invariants")
{
    const ScenarioConfig cfg = make_shared(2, Flavor::Reno, 20e6, 0.1, 900, 7);
    SimDiagnostics diag;
    const RateTrace t = run_shared_bottleneck(cfg, &diag);
    check_conservation(t);
    CHECK(diag.time_monotone);
    CHECK(diag.max_queue_bytes <= cfg.link->buffer_bytes);
    CHECK(diag.drops_with_space == 0);
    CHECK(diag.causality_violations == 0);
    CHECK(diag.min_rtt_s >= cfg.link->base_rtt_s - 1e-9);
    CHECK(diag.max_rtt_s <= cfg.link->base_rtt_s + cfg.link->max_queue_delay_s() + 1e-9);
    CHECK(run_shared_bottleneck(cfg) == t);

    // trace bytes agree with the delivered counter
    for (std::size_t f = 0; f < t.flow_count(); ++f) {
        CHECK(total_bytes(t, f) == t.counters[f].delivered_bytes);
    }
}

TEST_CASE("shared bottleneck: a single flow fills the link")
{
    const ScenarioConfig cfg = make_shared(1, Flavor::Reno, 10e6, 0.1, 1500, 7);
    const RateTrace t = run_shared_bottleneck(cfg);
    const double seconds = static_cast<double>(t.interval_count() - 300);
    CHECK(static_cast<double>(total_bytes(t, 0, 300)) * 8 / (cfg.link->capacity_bps * seconds) > 0.99);
    CHECK(t.counters[0].window_reductions > 0);
}

TEST_CASE("shared bottleneck: two flows complement each other")
{
    const ScenarioConfig cfg = make_shared(2, Flavor::Cubic, 20e6, 0.1, 900, 7);
    const RateTrace t = run_shared_bottleneck(cfg);
    int off = 0;
    for (std::size_t k = 300; k < t.interval_count(); ++k) {
        const double sum = static_cast<double>(t.bytes[0][k] + t.bytes[1][k]) * 8;
        if (std::abs(sum / 20e6 - 1) > 0.02) ++off;
    }
    CHECK(off <= 6);
}

TEST_CASE("finite flow: alone is faster than shared")
{
    ScenarioConfig alone = make_finite(0, Flavor::Reno, 100e6, 0.1, 12e6, 3, 7);
    const FiniteFlowResult a = run_finite_flow(alone);
    REQUIRE(a.completion_s.size() == 3);
    const double floor_s = 12e6 * 8 / 100e6;
    for (double c : a.completion_s) CHECK(c > floor_s);

    const FiniteFlowResult b = run_finite_flow(make_finite(9, Flavor::Reno, 100e6, 0.1, 12e6, 20, 7));
    REQUIRE(b.completion_s.size() == 20);
    REQUIRE(b.start_s.size() == 20);
    const double slowest_alone = *std::max_element(a.completion_s.begin(), a.completion_s.end());
    for (double c : b.completion_s) CHECK(c > slowest_alone);
    check_conservation(b.trace);
    for (std::size_t i = 1; i < b.start_s.size(); ++i) {
        CHECK(b.start_s[i] >= b.start_s[i - 1] + b.completion_s[i - 1]);
    }
}

TEST_CASE("config validation")
{
    ScenarioConfig cfg = make_random_drop(Flavor::Reno, 1e-3, 0.1, 600, 1);
    cfg.flows.push_back(cfg.flows.front());
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    ScenarioConfig neg = make_shared(2, Flavor::Reno, 20e6, 0.1, 600, 1);
    neg.duration_s = -1;
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
    CHECK_THROWS(make_shared(0, Flavor::Reno, 20e6, 0.1, 600, 1));
    ScenarioConfig jitter = make_shared(2, Flavor::Reno, 20e6, 0.1, 600, 1);
    jitter.tx_jitter_s = -0.1;
    CHECK_THROWS_AS(jitter.validate(), std::invalid_argument);
    CHECK(config_from_json(config_to_json(neg)) == neg);
}
