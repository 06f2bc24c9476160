#pragma once

// Congestion-control state machines for the simulator.
//
// Delayed ACKs are modelled at the sender: every `a` acknowledged segments
// form one ACK event, and each ACK event in congestion avoidance adds 1/cwnd.
// There is no byte counting, so growth is 1/a segment per RTT.

#include "tcpshare/tcp_formulas.hpp"

#include <cstdint>
#include <optional>

namespace tcpshare {

inline constexpr double kMinCwnd = 2.0;

namespace cubic {
inline constexpr double kC = 0.4;
inline constexpr double kBeta = 0.7;
/// Additive increase of the emulated Reno window, 3(1-beta)/(1+beta).
inline constexpr double kRenoAlpha = 3.0 * (1.0 - kBeta) / (1.0 + kBeta);
} // namespace cubic

struct FlowConfig {
    TcpParams tcp;
    double initial_cwnd = 10.0;
    /// Data volume for a finite flow; empty for a long-lived flow.
    std::optional<double> volume_bytes;

    Flavor flavor() const { return tcp.flavor; }
    void validate() const;
    bool operator==(const FlowConfig&) const = default;
};

struct FlowState {
    double cwnd = kMinCwnd;
    bool slow_start = false;
    /// Segments acknowledged since the last ACK event.
    int pending_acked = 0;

    // Cubic bookkeeping
    double w_max = kMinCwnd;
    double epoch_start_s = 0.0;
    double reno_estimate = kMinCwnd;

    std::uint64_t bytes_delivered = 0;
    std::uint64_t next_seq = 0;
    std::uint64_t highest_acked = 0;
};

/// Initial state. Long-lived flows start in congestion avoidance; finite
/// flows pass `slow_start = true`.
FlowState initial_state(const FlowConfig& cfg, double now_s, bool slow_start);

void reno_on_ack(FlowState& state, int acked_segments, int ack_ratio);
void reno_on_loss(FlowState& state);

/// Cubic curve C (t - K)^3 + w_max with K = cbrt(w_max (1 - beta) / C).
double cubic_curve(double t_since_epoch, double w_max);

/// max(cubic curve, Reno emulation w_max*beta + alpha * t / rtt).
double cubic_window(double t_since_epoch, double w_max, double rtt_s);

void cubic_on_ack(FlowState& state, int acked_segments, int ack_ratio, double now_s);
void cubic_on_loss(FlowState& state, double now_s);

/// Flavor dispatch used by the simulator.
void on_ack(FlowState& state, const FlowConfig& cfg, int acked_segments, double now_s);
void on_loss(FlowState& state, const FlowConfig& cfg, double now_s);

/// Integral ACK ratio; throws if cfg.tcp.ack_ratio is not a whole number.
int ack_events_ratio(const TcpParams& params);

} // namespace tcpshare
