#pragma once

// Canonical experiment setups shared by `verify` and `reproduce`.

#include "tcpshare/markov_chain.hpp"
#include "tcpshare/scenario.hpp"
#include "tcpshare/tcp_formulas.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tcpshare::cli::detail {

inline constexpr double kFairRate = 10e6;
inline constexpr double kBaseRtt = 0.1;
inline constexpr std::uint64_t kSeed = 7;
inline constexpr double kWarmup = 300.0;
inline constexpr double kDeskMeasure = 7200.0;
inline constexpr double kFullMeasure = 43200.0;
inline constexpr int kDeskRepetitions = 500;
inline constexpr int kFullRepetitions = 2500;
inline constexpr double kFiniteVolume = 12e6;

inline double measured_span(bool full)
{
    return full ? kFullMeasure : kDeskMeasure;
}

/// Loss probability at which `flavor` averages the fair rate.
inline double operating_loss(Flavor flavor, double rtt_s = kBaseRtt)
{
    TcpParams tcp;
    tcp.flavor = flavor;
    tcp.rtt_s = rtt_s;
    return required_loss(kFairRate, tcp);
}

inline ScenarioConfig random_drop_run(Flavor flavor, double duration_s,
                                      LossReaction reaction = LossReaction::PerLoss)
{
    return make_random_drop(flavor, operating_loss(flavor), kBaseRtt, duration_s, kSeed, reaction);
}

/// `n` flows sharing n * 10 Mbit/s.
inline ScenarioConfig shared_run(int n, Flavor flavor, double rtt_s, double measure_s)
{
    return make_shared(n, flavor, n * kFairRate, rtt_s, kWarmup + measure_s, kSeed);
}

/// Nine long-lived flows plus the repeated finite flow on 100 Mbit/s.
inline ScenarioConfig finite_run(Flavor flavor, int repetitions)
{
    return make_finite(9, flavor, 10 * kFairRate, kBaseRtt, kFiniteVolume, repetitions, kSeed);
}

/// Largest gap between the cumulative occupancy of simulated windows
/// (seconds per floor(cwnd)) and the chain's equilibrium CDF.
inline double occupancy_ks(const std::vector<double>& occupancy, const StateDistribution& dist)
{
    double total = 0.0;
    for (double x : occupancy) total += x;
    if (total <= 0.0) return 1.0;
    const int top = std::max(dist.last_state(), static_cast<int>(occupancy.size()) - 1);
    double sim = 0.0;
    double chain = 0.0;
    double ks = 0.0;
    for (int i = 0; i <= top; ++i) {
        if (i < static_cast<int>(occupancy.size())) sim += occupancy[static_cast<std::size_t>(i)] / total;
        if (i >= dist.first_state() && i <= dist.last_state()) chain += dist.at(i);
        ks = std::max(ks, std::abs(sim - chain));
    }
    return ks;
}

} // namespace tcpshare::cli::detail
