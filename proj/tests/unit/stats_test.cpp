#include "doctest.h"

#include "tcpshare/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <random>

using namespace tcpshare;

namespace {

RateTrace synthetic(std::vector<std::uint64_t> bytes)
{
    RateTrace t;
    t.config.warmup_s = 0;
    t.config.duration_s = static_cast<double>(bytes.size());
    t.bytes.push_back(std::move(bytes));
    return t;
}

} // namespace

TEST_CASE("reaggregate")
{
    const RateTrace flat = synthetic(std::vector<std::uint64_t>(120, 1250000));
    for (double w : {1.0, 4.0, 30.0}) {
        for (double s : reaggregate(flat, w).samples_bps) CHECK(s == doctest::Approx(10e6));
    }

    std::vector<std::uint64_t> alt;
    for (int k = 0; k < 10; ++k) alt.push_back(k % 2 ? 1875000 : 625000);
    for (double s : reaggregate(synthetic(alt), 2.0).samples_bps) CHECK(s == doctest::Approx(10e6));

    RateTrace long_run = synthetic(std::vector<std::uint64_t>(43200, 1));
    long_run.config.warmup_s = 300;
    CHECK(reaggregate(long_run, 600).samples_bps.size() == 71);
    long_run.config.warmup_s = 0;
    CHECK(reaggregate(long_run, 600).samples_bps.size() == 72);

    CHECK_THROWS_AS(reaggregate(flat, 1.5), std::invalid_argument);

    // total bytes kept except the discarded tail
    std::vector<std::uint64_t> ramp;
    for (std::uint64_t k = 0; k < 103; ++k) ramp.push_back(k * 17);
    const auto series = reaggregate(synthetic(ramp), 10.0);
    double kept = 0;
    for (double s : series.samples_bps) kept += s * 10 / 8;
    std::uint64_t expected = 0;
    for (std::size_t k = 0; k < 100; ++k) expected += ramp[k];
    CHECK(static_cast<std::uint64_t>(std::llround(kept)) == expected);
}

TEST_CASE("histogram")
{
    const Histogram point = histogram(std::vector<double>(10, 3.3), 1.0);
    int occupied = 0;
    for (double d : point.density) occupied += d > 0;
    CHECK(occupied == 1);
    CHECK(point.mass() == doctest::Approx(1.0).epsilon(1e-12));

    std::mt19937_64 g(1);
    std::normal_distribution<double> n(10, 3);
    std::vector<double> v;
    for (int k = 0; k < 5000; ++k) v.push_back(std::abs(n(g)));
    CHECK(std::abs(histogram(v, 0.5).mass() - 1.0) < 1e-12);
}

TEST_CASE("summary")
{
    std::vector<double> v;
    for (int k = 100; k >= 1; --k) v.push_back(k);
    const SummaryStats s = summary(v);
    CHECK(s.q05 == 5);
    CHECK(s.q50 == 50);
    CHECK(s.q95 == 95);
    CHECK(s.mean == doctest::Approx(50.5));
    CHECK(s.stddev == doctest::Approx(std::sqrt((100.0 * 100 - 1) / 12)));
    CHECK_THROWS_AS(summary(std::vector<double>{}), std::invalid_argument);

    std::mt19937_64 g(3);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w;
    for (int k = 0; k < 777; ++k) w.push_back(e(g));
    const SummaryStats t = summary(w);
    CHECK(t.q05 <= t.q50);
    CHECK(t.q50 <= t.q95);
    for (double q : {t.q05, t.q50, t.q95}) CHECK(std::find(w.begin(), w.end(), q) != w.end());
}

TEST_CASE("stddev against interval follows CLT scaling on independent samples")
{
    std::mt19937_64 g(5);
    std::uniform_int_distribution<std::uint64_t> u(0, 2500000);
    std::vector<std::uint64_t> bytes(64 * 2000);
    for (auto& b : bytes) b = u(g);
    const RateTrace t = synthetic(bytes);
    const std::vector<double> intervals{1, 4, 16, 64};
    const auto curve = stddev_vs_interval(t, intervals);
    REQUIRE(curve.size() == 4);
    for (std::size_t k = 1; k < curve.size(); ++k) {
        CHECK(curve[k].stddev_bps / curve[0].stddev_bps
              == doctest::Approx(1 / std::sqrt(intervals[k])).epsilon(0.08));
    }
    CHECK(default_intervals() == std::vector<double>{1, 4, 16, 30, 60, 120, 300, 600});
}

TEST_CASE("sawtooth interval")
{
    CHECK(sawtooth_interval(4.0e-5, 10e6, 1514) == doctest::Approx(30.28).epsilon(0.001));
    CHECK(sawtooth_interval(3.3e-3, 10e6, 1514) == doctest::Approx(0.37).epsilon(0.01));
    CHECK(sawtooth_interval(2.8e-3, 10e6, 1514) == doctest::Approx(0.42).epsilon(0.10));
    CHECK(sawtooth_interval(2.5e-4, 10e6, 1514) == doctest::Approx(4.7).epsilon(0.10));
    CHECK(sawtooth_interval(8e-5, 10e6, 1514) == doctest::Approx(sawtooth_interval(4e-5, 10e6, 1514) / 2));
}

TEST_CASE("convergence interval")
{
    const std::vector<CurvePoint> flat{{1, 4}, {600, 4}};
    CHECK_FALSE(convergence_interval_50(flat).has_value());

    const std::vector<CurvePoint> halving{{1, 4}, {16, 3}, {256, 1}};
    // 2 is halfway from 3 to 1, so halfway in log between 16 and 256
    CHECK(*convergence_interval_50(halving) == doctest::Approx(64));

    const std::vector<CurvePoint> exact{{1, 4}, {4, 2}};
    CHECK(*convergence_interval_50(exact) == doctest::Approx(4));
}
