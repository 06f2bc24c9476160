#include "tcpshare/flow_models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tcpshare {

void FlowConfig::validate() const
{
    tcp.validate();
    if (!(initial_cwnd >= kMinCwnd)) throw std::invalid_argument("initial_cwnd must be >= 2");
    if (volume_bytes && !(*volume_bytes > 0.0)) {
        throw std::invalid_argument("finite flow volume must be positive");
    }
    (void)ack_events_ratio(tcp);
}

int ack_events_ratio(const TcpParams& params)
{
    const double r = std::round(params.ack_ratio);
    if (r < 1.0 || std::abs(r - params.ack_ratio) > 1e-9) {
        throw std::invalid_argument("simulated ack ratio must be a positive integer");
    }
    return static_cast<int>(r);
}

FlowState initial_state(const FlowConfig& cfg, double now_s, bool slow_start)
{
    FlowState s;
    s.cwnd = std::max(kMinCwnd, cfg.initial_cwnd);
    s.slow_start = slow_start;
    s.w_max = s.cwnd;
    s.epoch_start_s = now_s;
    s.reno_estimate = s.cwnd;
    return s;
}

void reno_on_ack(FlowState& state, int acked_segments, int ack_ratio)
{
    state.pending_acked += acked_segments;
    while (state.pending_acked >= ack_ratio) {
        state.pending_acked -= ack_ratio;
        state.cwnd += state.slow_start ? 1.0 : 1.0 / state.cwnd;
    }
}

void reno_on_loss(FlowState& state)
{
    state.cwnd = std::max(kMinCwnd, state.cwnd / 2.0);
    state.slow_start = false;
}

double cubic_curve(double t_since_epoch, double w_max)
{
    const double k = std::cbrt(w_max * (1.0 - cubic::kBeta) / cubic::kC);
    const double d = t_since_epoch - k;
    return cubic::kC * d * d * d + w_max;
}

double cubic_window(double t_since_epoch, double w_max, double rtt_s)
{
    const double reno = w_max * cubic::kBeta + cubic::kRenoAlpha * (t_since_epoch / rtt_s);
    return std::max(cubic_curve(t_since_epoch, w_max), reno);
}

void cubic_on_ack(FlowState& state, int acked_segments, int ack_ratio, double now_s)
{
    state.pending_acked += acked_segments;
    while (state.pending_acked >= ack_ratio) {
        state.pending_acked -= ack_ratio;
        if (state.slow_start) {
            state.cwnd += 1.0;
            continue;
        }
        // the emulated Reno window sees the same ACK events as a Reno flow would
        state.reno_estimate += cubic::kRenoAlpha / state.cwnd;
        const double target =
            std::max(cubic_curve(now_s - state.epoch_start_s, state.w_max), state.reno_estimate);
        if (target > state.cwnd) {
            state.cwnd += (target - state.cwnd) / state.cwnd;
        } else {
            state.cwnd += 0.01 / state.cwnd;
        }
    }
}

void cubic_on_loss(FlowState& state, double now_s)
{
    state.w_max = state.cwnd;
    state.cwnd = std::max(kMinCwnd, cubic::kBeta * state.cwnd);
    state.epoch_start_s = now_s;
    state.reno_estimate = state.cwnd;
    state.slow_start = false;
}

void on_ack(FlowState& state, const FlowConfig& cfg, int acked_segments, double now_s)
{
    const int a = ack_events_ratio(cfg.tcp);
    if (cfg.flavor() == Flavor::Reno) {
        reno_on_ack(state, acked_segments, a);
    } else {
        cubic_on_ack(state, acked_segments, a, now_s);
    }
}

void on_loss(FlowState& state, const FlowConfig& cfg, double now_s)
{
    if (cfg.flavor() == Flavor::Reno) {
        reno_on_loss(state);
    } else {
        cubic_on_loss(state, now_s);
    }
}

} // namespace tcpshare
