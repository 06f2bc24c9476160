#include "doctest.h"

#include "tcpshare/flow_models.hpp"
#include "tcpshare/scenario.hpp"
#include "tcpshare/sim.hpp"

#include <cmath>

using namespace tcpshare;

namespace {

FlowState at(double cwnd)
{
    FlowConfig cfg;
    cfg.initial_cwnd = cwnd;
    return initial_state(cfg, 0.0, false);
}

} // namespace

TEST_CASE("reno increase")
{
    FlowState s = at(10);
    for (int k = 0; k < 5; ++k) reno_on_ack(s, 2, 2);
    CHECK(s.cwnd == doctest::Approx(10.5).epsilon(0.002));

    // a * cwnd segments from cwnd 2 add one segment to first order
    FlowState two = at(2);
    reno_on_ack(two, 4, 2);
    CHECK(two.cwnd == doctest::Approx(3.0).epsilon(0.1));

    // single-segment ACKs accumulate until a full ACK event
    FlowState partial = at(10);
    reno_on_ack(partial, 1, 2);
    CHECK(partial.cwnd == 10.0);
    reno_on_ack(partial, 1, 2);
    CHECK(partial.cwnd == doctest::Approx(10.1));
}

TEST_CASE("reno grows by 1/a per round trip")
{
    for (int a : {1, 2, 3}) {
        FlowState s = at(50);
        const int rounds = 40;
        for (int r = 0; r < rounds; ++r) {
            const int window = static_cast<int>(std::floor(s.cwnd));
            reno_on_ack(s, window, a);
        }
        CHECK((s.cwnd - 50.0) / rounds == doctest::Approx(1.0 / a).epsilon(0.02));
    }
}

TEST_CASE("reno decrease")
{
    FlowState s = at(100);
    reno_on_loss(s);
    CHECK(s.cwnd == 50);
    reno_on_loss(s);
    CHECK(s.cwnd == 25);
    FlowState small = at(3);
    reno_on_loss(small);
    CHECK(small.cwnd == 2);
}

TEST_CASE("cubic window function")
{
    const double w = 100;
    const double k = std::cbrt(w * (1 - cubic::kBeta) / cubic::kC);
    CHECK(cubic_curve(0, w) == doctest::Approx(0.7 * w));
    CHECK(cubic_curve(k, w) == doctest::Approx(w));
    CHECK(cubic_window(0, w, 0.1) == doctest::Approx(0.7 * w));
    // continuity
    for (double t = 0.0; t < 20.0; t += 0.37) {
        CHECK(std::abs(cubic_window(t + 1e-6, w, 0.1) - cubic_window(t, w, 0.1)) < 1e-3);
    }
    // the Reno emulation takes over on small windows and long round trips
    CHECK(cubic_window(100.0, 10, 1.0) > cubic_curve(100.0, 10) - 1e-9);
}

TEST_CASE("cubic decrease")
{
    FlowConfig cfg;
    cfg.tcp.flavor = Flavor::Cubic;
    cfg.initial_cwnd = 100;
    FlowState s = initial_state(cfg, 0, false);
    cubic_on_loss(s, 1.0);
    CHECK(s.cwnd == doctest::Approx(70));
    CHECK(s.w_max == 100);
    cubic_on_loss(s, 2.0);
    CHECK(s.w_max == doctest::Approx(70));
    CHECK(s.cwnd == doctest::Approx(49));
    FlowState small = initial_state(cfg, 0, false);
    small.cwnd = 2.5;
    cubic_on_loss(small, 0.0);
    CHECK(small.cwnd == 2);
}

TEST_CASE("windows never fall below two")
{
    for (Flavor f : {Flavor::Reno, Flavor::Cubic}) {
        FlowConfig cfg;
        cfg.tcp.flavor = f;
        FlowState s = initial_state(cfg, 0, false);
        for (int k = 0; k < 50; ++k) {
            on_loss(s, cfg, k * 0.1);
            CHECK(s.cwnd >= kMinCwnd);
            on_ack(s, cfg, 1, k * 0.1 + 0.05);
        }
    }
}

TEST_CASE("slow start doubles per round trip")
{
    FlowConfig cfg;
    FlowState s = initial_state(cfg, 0, true);
    reno_on_ack(s, 10, 1);
    CHECK(s.cwnd == 20);
    reno_on_loss(s);
    CHECK_FALSE(s.slow_start);
}

TEST_CASE("steady-state mean windows under random loss")
{
    for (Flavor f : {Flavor::Reno, Flavor::Cubic}) {
        TcpParams tcp;
        tcp.flavor = f;
        const double p = required_loss(10e6, tcp);
        const ScenarioConfig cfg = make_random_drop(f, p, 0.1, 3900, 11);
        const RateTrace t = run_random_drop(cfg);
        double bytes = 0;
        const std::size_t skip = 300;
        for (std::size_t k = skip; k < t.interval_count(); ++k) bytes += static_cast<double>(t.bytes[0][k]);
        const double mean_rate = bytes * 8 / static_cast<double>(t.interval_count() - skip);
        const double mean_cwnd = mean_rate * tcp.rtt_s / tcp.mss_bits();
        CHECK(mean_cwnd == doctest::Approx(expected_cwnd(p, tcp)).epsilon(0.10));
    }
}
