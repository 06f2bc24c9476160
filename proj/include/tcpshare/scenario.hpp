#pragma once

#include "tcpshare/flow_models.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tcpshare {

inline constexpr std::string_view kEngineVersion = "tcpshare-sim 1.0";

enum class Scenario { RandomDrop, SharedBottleneck, FiniteFlow };
enum class LossReaction { PerLoss, PerWindow };

std::string_view to_string(Scenario s);
std::string_view to_string(LossReaction r);
Scenario parse_scenario(std::string_view text);
LossReaction parse_loss_reaction(std::string_view text);

struct LinkSpec {
    double capacity_bps = 20e6;
    double buffer_bytes = 250000.0;
    double base_rtt_s = 0.1;

    /// Link whose buffer equals the bandwidth-delay product.
    static LinkSpec with_bdp_buffer(double capacity_bps, double base_rtt_s);

    /// Largest sojourn time through a full buffer.
    double max_queue_delay_s() const { return buffer_bytes * 8.0 / capacity_bps; }
    void validate() const;
    bool operator==(const LinkSpec&) const = default;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::RandomDrop;
    std::vector<FlowConfig> flows;
    std::optional<LinkSpec> link; ///< absent for RandomDrop
    double p_loss = 0.0;          ///< RandomDrop only
    double duration_s = 7200.0;
    std::uint64_t seed = 7;
    LossReaction loss_reaction = LossReaction::PerLoss;
    double interval_s = 1.0;
    double warmup_s = 300.0;
    int repetitions = 0;      ///< FiniteFlow: stop after this many completions (0 = run to duration)
    double idle_gap_s = 5.0;  ///< FiniteFlow: pause between repetitions
    /// Bottleneck scenarios: each packet leaves its host after a uniform
    /// delay in [0, tx_jitter_s), never overtaking the flow's previous packet.
    /// Empty means one packet service time at the bottleneck.
    std::optional<double> tx_jitter_s;

    void validate() const;
    /// Number of whole trace intervals covered by duration_s.
    std::size_t interval_count() const;
    bool operator==(const ScenarioConfig&) const = default;
};

/// One Reno or Cubic flow at the given loss probability; starts at the
/// expected window of its response function.
ScenarioConfig make_random_drop(Flavor flavor, double p_loss, double rtt_s, double duration_s,
                                std::uint64_t seed, LossReaction reaction = LossReaction::PerLoss);

/// `n` identical long-lived flows over a BDP-buffered tail-drop link.
ScenarioConfig make_shared(int n, Flavor flavor, double capacity_bps, double rtt_s,
                           double duration_s, std::uint64_t seed);

/// `long_lived` flows plus one repeated finite flow of `volume_bytes`.
ScenarioConfig make_finite(int long_lived, Flavor flavor, double capacity_bps, double rtt_s,
                           double volume_bytes, int repetitions, std::uint64_t seed);

struct FlowCounters {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t in_flight_at_end = 0;
    std::uint64_t retransmits = 0;
    std::uint64_t window_reductions = 0;
    std::uint64_t stalls = 0;
    std::uint64_t delivered_bytes = 0; ///< bytes inside the trace window

    double loss_ratio() const { return sent ? static_cast<double>(dropped) / static_cast<double>(sent) : 0.0; }
    bool operator==(const FlowCounters&) const = default;
};

/// Per-flow bytes carried in consecutive fixed intervals from t = 0.
struct RateTrace {
    double interval_s = 1.0;
    std::vector<std::vector<std::uint64_t>> bytes; ///< [flow][interval]
    ScenarioConfig config;
    std::vector<FlowCounters> counters;
    std::string engine_version{kEngineVersion};

    std::size_t flow_count() const { return bytes.size(); }
    std::size_t interval_count() const { return bytes.empty() ? 0 : bytes.front().size(); }
    bool operator==(const RateTrace&) const = default;
};

/// Canonical JSON text of a config (sorted keys, shortest round-trip numbers).
std::string config_to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(std::string_view text);

} // namespace tcpshare
