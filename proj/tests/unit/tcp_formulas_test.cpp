#include "doctest.h"

#include "tcpshare/tcp_formulas.hpp"

#include <cmath>
#include <stdexcept>

using namespace tcpshare;

namespace {

TcpParams params(Flavor f = Flavor::Reno, double rtt = 0.1)
{
    TcpParams p;
    p.flavor = f;
    p.rtt_s = rtt;
    return p;
}

} // namespace

TEST_CASE("flow_rate")
{
    CHECK(flow_rate(82.6, params()) == doctest::Approx(82.6 * 1514 * 8 / 0.1));
    TcpParams one = params();
    one.rtt_s = 1.0;
    CHECK(flow_rate(1.0, one) == 12112.0);
    CHECK(flow_rate(0.5, one) == 6056.0);
    // exact linearity in cwnd and 1/rtt
    CHECK(flow_rate(4.0, one) == 4.0 * flow_rate(1.0, one));
    TcpParams quarter = one;
    quarter.rtt_s = 0.25;
    CHECK(flow_rate(1.0, quarter) == 4.0 * flow_rate(1.0, one));
}

TEST_CASE("reno response function")
{
    CHECK(reno_expected_cwnd(1.1e-4, 2) == doctest::Approx(std::sqrt(0.75 / 1.1e-4)));
    CHECK(reno_expected_cwnd(1.1e-4, 2) == doctest::Approx(82.6).epsilon(0.001));
    CHECK(reno_expected_cwnd(3.0 / 8.0, 2) == doctest::Approx(std::sqrt(2.0)));
    CHECK(reno_expected_cwnd(0.75, 1) == doctest::Approx(std::sqrt(2.0)));

    CHECK(reno_expected_rate(1.1e-4, params()) == doctest::Approx(10e6).epsilon(0.02));
    CHECK(reno_expected_rate(4e-4, params()) == doctest::Approx(reno_expected_rate(1e-4, params()) / 2));
    TcpParams one = params();
    one.rtt_s = 1.0;
    CHECK(reno_expected_rate(3.0 / 8.0, one) == doctest::Approx(std::sqrt(2.0) * 12112.0));

    CHECK(reno_required_loss(10e6, params()) == doctest::Approx(1.1e-4).epsilon(0.05));
    CHECK(reno_required_loss(20e6, params()) == doctest::Approx(reno_required_loss(10e6, params()) / 4));
}

TEST_CASE("cubic response function")
{
    CHECK(cubic_expected_cwnd(3.4e-4, 0.1) == doctest::Approx(1.17 * std::pow(0.1 / 3.4e-4, 0.75)));
    CHECK(cubic_expected_cwnd(3.4e-4, 0.1) == doctest::Approx(83).epsilon(0.01));
    CHECK(cubic_expected_cwnd(0.1, 0.1) == doctest::Approx(1.17));
    CHECK(cubic_expected_cwnd(1e-3 / 16, 0.1) == doctest::Approx(8 * cubic_expected_cwnd(1e-3, 0.1)));

    CHECK(cubic_required_loss(10e6, params(Flavor::Cubic)) == doctest::Approx(3.4e-4).epsilon(0.05));
    TcpParams big = params(Flavor::Cubic);
    big.mss_bytes *= 2;
    CHECK(cubic_required_loss(10e6, big) / cubic_required_loss(10e6, params(Flavor::Cubic))
          == doctest::Approx(std::pow(2.0, 4.0 / 3.0)));
}

TEST_CASE("round trips over six decades")
{
    for (Flavor f : {Flavor::Reno, Flavor::Cubic}) {
        for (double b = 1e6; b <= 1e12; b *= 3.7) {
            const double p = required_loss(b, params(f));
            const double back = f == Flavor::Reno ? reno_expected_rate(p, params(f)) : cubic_expected_rate(p, params(f));
            CHECK(std::abs(back / b - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("expected windows decrease in p_loss")
{
    double prev_r = INFINITY;
    double prev_c = INFINITY;
    for (double p = 1e-7; p < 0.9; p *= 1.5) {
        CHECK(reno_expected_cwnd(p, 2) < prev_r);
        CHECK(cubic_expected_cwnd(p, 0.1) < prev_c);
        prev_r = reno_expected_cwnd(p, 2);
        prev_c = cubic_expected_cwnd(p, 0.1);
    }
}

TEST_CASE("parameter validation")
{
    CHECK_THROWS_AS(parse_flavor("vegas"), std::invalid_argument);
    CHECK(parse_flavor("CUBIC") == Flavor::Cubic);
    TcpParams bad = params();
    bad.rtt_s = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
