#pragma once

// Deterministic simulation of TCP flows.
//
// RandomDrop advances one flow round by round (one RTT per round, no queue).
// SharedBottleneck and FiniteFlow run a packet-level event loop over a single
// tail-drop FIFO. All times inside the engines are integer nanoseconds, and
// ties between events are broken by scheduling order, so a config plus seed
// fully determines the output.

#include "tcpshare/scenario.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace tcpshare {

/// Optional instrumentation filled in by the engines.
struct SimDiagnostics {
    std::uint64_t events = 0;
    bool time_monotone = true;
    double max_queue_bytes = 0.0;
    std::uint64_t drops_with_space = 0;
    double min_rtt_s = std::numeric_limits<double>::infinity();
    double max_rtt_s = 0.0;
    std::uint64_t causality_violations = 0;
    /// Seconds flow 0 spent with floor(cwnd) == index, after warm-up.
    std::vector<double> cwnd_occupancy;
};

RateTrace run_random_drop(const ScenarioConfig& cfg, SimDiagnostics* diag = nullptr);
RateTrace run_shared_bottleneck(const ScenarioConfig& cfg, SimDiagnostics* diag = nullptr);

struct FiniteFlowResult {
    std::vector<double> completion_s;
    std::vector<double> start_s; ///< start time of each completed repetition
    RateTrace trace;
};

FiniteFlowResult run_finite_flow(const ScenarioConfig& cfg, SimDiagnostics* diag = nullptr);

/// Runs whichever engine `cfg.scenario` names and returns its trace.
RateTrace run_scenario(const ScenarioConfig& cfg, SimDiagnostics* diag = nullptr);

struct LossRatios {
    std::vector<double> per_flow;
    double aggregate = 0.0;
};

/// dropped / sent, per flow and over all flows.
LossRatios measured_loss_ratio(const RateTrace& trace);

} // namespace tcpshare
