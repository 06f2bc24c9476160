#include "doctest.h"

#include "tcpshare/markov_chain.hpp"
#include "tcpshare/tcp_formulas.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <numeric>
#include <vector>

using namespace tcpshare;

namespace {

ChainSpec spec_with(double p_loss, int cwnd_max, double a = 2.0)
{
    ChainSpec s;
    s.p_loss = p_loss;
    s.cwnd_max = cwnd_max;
    s.ack_ratio = a;
    return s;
}

// Exact equilibrium by solving the balance equations from the top state
// downwards. State max is entered only from max-1, so p[max-1] follows from
// p[max]; every other state i gets its halving inflow from states above it,
// which leaves p[i-1] determined.
std::vector<double> top_down(double P, int max)
{
    std::vector<double> p(static_cast<std::size_t>(max + 1), 0.0);
    auto out = [&](int i) { return i == 2 ? 1.0 : (i == max ? i * P : 1.0 + i * P); };
    p[static_cast<std::size_t>(max)] = 1.0;
    for (int i = max; i >= 3; --i) {
        double halving_in = 0.0;
        for (int j = i + 1; j <= max; ++j) {
            if (std::max(2, j / 2) == i) halving_in += j * P * p[static_cast<std::size_t>(j)];
        }
        p[static_cast<std::size_t>(i - 1)] = out(i) * p[static_cast<std::size_t>(i)] - halving_in;
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= total;
    return p;
}

// Stationary law of the uniformized jump chain by power iteration.
std::vector<double> power_iteration(double P, int max)
{
    const int n = max + 1;
    auto out = [&](int i) { return i == 2 ? 1.0 : (i == max ? i * P : 1.0 + i * P); };
    double lambda = 0.0;
    for (int i = 2; i <= max; ++i) lambda = std::max(lambda, out(i));
    lambda *= 1.1;
    std::vector<double> p(static_cast<std::size_t>(n), 0.0);
    for (int i = 2; i <= max; ++i) p[static_cast<std::size_t>(i)] = 1.0 / (max - 1);
    for (int it = 0; it < 200000; ++it) {
        std::vector<double> next(static_cast<std::size_t>(n), 0.0);
        for (int i = 2; i <= max; ++i) {
            const double pi = p[static_cast<std::size_t>(i)];
            const double up = i < max ? 1.0 : 0.0;
            const double down = i > 2 ? i * P : 0.0;
            if (up > 0) next[static_cast<std::size_t>(i + 1)] += pi * up / lambda;
            if (down > 0) next[static_cast<std::size_t>(std::max(2, i / 2))] += pi * down / lambda;
            next[static_cast<std::size_t>(i)] += pi * (1.0 - (up + down) / lambda);
        }
        p.swap(next);
    }
    return p;
}

} // namespace

TEST_CASE("halving target")
{
    CHECK(halving_target(3) == 2);
    CHECK(halving_target(9) == 4);
    CHECK(halving_target(4) == 2);
    CHECK(halving_target(5) == 2);
    CHECK(halving_target(2) == 2);
}

TEST_CASE("transition matrix, cwnd_max 4, P 0.1")
{
    const TransitionMatrix m(spec_with(0.05, 4));
    CHECK(m.out_rate(2) == doctest::Approx(1.0));
    CHECK(m.out_rate(3) == doctest::Approx(1.3));
    CHECK(m.out_rate(4) == doctest::Approx(0.4));
    CHECK(m.at(3, 2) == doctest::Approx(1 / 1.3));
    CHECK(m.at(2, 3) == doctest::Approx(0.3));
    CHECK(m.at(4, 3) == doctest::Approx(1 / 0.4));
    CHECK(m.at(2, 4) == doctest::Approx(0.4));
    CHECK(m.at(3, 4) == 0.0);
    CHECK(m.at(4, 2) == 0.0);
}

TEST_CASE("transition matrix, cwnd_max 9 pattern")
{
    const ChainSpec s = spec_with(0.01, 9);
    const double P = s.shortcut();
    const TransitionMatrix m(s);
    CHECK(m.rate(2, 3) == doctest::Approx(3 * P));
    CHECK(m.rate(2, 4) == doctest::Approx(4 * P));
    CHECK(m.rate(2, 5) == doctest::Approx(5 * P));
    CHECK(m.rate(4, 9) == doctest::Approx(9 * P));
    CHECK(m.at(9, 8) == doctest::Approx(1 / (9 * P)));
    CHECK(m.rate(2, 1 + 1) == 0.0);
    // every column of the raw rates sums to the outgoing rate
    for (int j = 2; j <= 9; ++j) {
        double col = 0.0;
        for (int i = 2; i <= 9; ++i) col += m.rate(i, j);
        CHECK(col == doctest::Approx(m.out_rate(j)));
    }
    CHECK_THROWS(TransitionMatrix(spec_with(0.01, 3)));
}

TEST_CASE("two-state chain")
{
    // cwnd_max 3 is below the modelled minimum, so check the balance law on
    // the oracle directly: p2 * 1 = p3 * 3P with P = 1/3
    const auto p = top_down(1.0 / 3.0, 3);
    CHECK(p[2] == doctest::Approx(0.5));
    CHECK(p[3] == doctest::Approx(0.5));
}

TEST_CASE("solver matches both oracles")
{
    for (int max : {4, 5, 7, 9, 12}) {
        for (double p_loss : {0.2, 0.05, 0.01, 1e-3}) {
            const ChainSpec s = spec_with(p_loss, max);
            const StateDistribution d = solve_chain(s);
            const auto exact = top_down(s.shortcut(), max);
            const auto iter = power_iteration(s.shortcut(), max);
            for (int i = 2; i <= max; ++i) {
                CHECK(d.at(i) == doctest::Approx(exact[static_cast<std::size_t>(i)]).epsilon(1e-9));
                CHECK(d.at(i) == doctest::Approx(iter[static_cast<std::size_t>(i)]).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("solution properties")
{
    const ChainSpec s = resolve(spec_with(1e-3, 0));
    const TransitionMatrix m(s);
    const StateDistribution d = solve_equilibrium(m);
    double total = 0.0;
    for (double x : d.probabilities) {
        CHECK(x >= 0.0);
        total += x;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(balance_residual(m, d) <= 1e-10);

    // invariant under a common time scale: changing rtt or mss changes nothing
    ChainSpec scaled = s;
    scaled.rtt_s = 0.01;
    scaled.mss_bytes = 9000;
    const StateDistribution d2 = solve_chain(scaled);
    for (std::size_t k = 0; k < d.probabilities.size(); ++k) {
        CHECK(d2.probabilities[k] == doctest::Approx(d.probabilities[k]).epsilon(1e-12));
    }
}

TEST_CASE("auto cwnd_max")
{
    const int m = auto_cwnd_max(1.1e-4, 2);
    CHECK(m >= 8 * reno_expected_cwnd(1.1e-4, 2));
    CHECK(m / 2 < 8 * reno_expected_cwnd(1.1e-4, 2));
    CHECK((m & (m - 1)) == 0);
    CHECK(resolve(spec_with(1.1e-4, 0)).cwnd_max == m);
}

TEST_CASE("rate distribution at the Reno operating point")
{
    const DistributionStats st = distribution_stats(rate_distribution(solve_chain(spec_with(1.1e-4, 1024))));
    CHECK(st.q05 / 1e6 == doctest::Approx(4.7).epsilon(0.05));
    CHECK(st.q50 / 1e6 == doctest::Approx(10.0).epsilon(0.05));
    CHECK(st.q95 / 1e6 == doctest::Approx(19.0).epsilon(0.05));
    CHECK(st.mean / 1e6 == doctest::Approx(10.7).epsilon(0.05));
}

TEST_CASE("chain mean tracks the square-root law")
{
    for (double p : {1e-5, 1e-4, 1e-3, 1e-2}) {
        const StateDistribution d = solve_chain(spec_with(p, 0));
        CHECK(d.mean_cwnd() == doctest::Approx(reno_expected_cwnd(p, 2)).epsilon(0.10));
    }
}

TEST_CASE("point-mass distribution")
{
    StateDistribution d;
    d.spec = spec_with(1e-3, 6);
    d.probabilities = {0, 0, 1, 0, 0};
    const DiscretePmf pmf = rate_distribution(d);
    TcpParams tcp;
    const DistributionStats st = distribution_stats(pmf);
    CHECK(st.mean == doctest::Approx(flow_rate(4, tcp)));
    CHECK(st.q05 == st.q95);
    CHECK(st.q50 == doctest::Approx(flow_rate(4, tcp)));
    CHECK(st.stddev == doctest::Approx(0.0));
}

TEST_CASE("log-normal comparison")
{
    CHECK(lognormal_cdf(50, 50, 0.41) == doctest::Approx(0.5));
    CHECK(lognormal_cdf(50 * std::exp(0.41), 50, 0.41) == doctest::Approx(0.841345).epsilon(1e-5));
    CHECK(lognormal_cdf(1e-12, 50, 0.41) < 1e-12);
    CHECK(lognormal_cdf(1e9, 50, 0.41) == doctest::Approx(1.0));

    // a chain whose states carry exactly the log-normal cell masses
    StateDistribution d;
    d.spec = spec_with(1e-4, 1024);
    const double e = 80;
    for (int i = 2; i <= 1024; ++i) {
        const double lo = i == 2 ? 0.0 : lognormal_cdf(i, e, 0.41);
        const double hi = i == 1024 ? 1.0 : lognormal_cdf(i + 1, e, 0.41);
        d.probabilities.push_back(hi - lo);
    }
    CHECK(ks_distance(d, e, 0.41) < 1e-9);

    for (double p : {1e-5, 1e-4, 1e-3, 1e-2}) {
        CHECK(ks_distance(solve_chain(spec_with(p, 0)), reno_expected_cwnd(p, 2), kLognormalSigma) <= 0.05);
    }
}
