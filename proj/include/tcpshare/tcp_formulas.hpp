#pragma once

#include <string_view>

namespace tcpshare {

enum class Flavor { Reno, Cubic };

std::string_view to_string(Flavor flavor);
/// Parses "reno" / "cubic" (case-insensitive). Throws std::invalid_argument otherwise.
Flavor parse_flavor(std::string_view text);

/// Static per-connection TCP parameters.
///
/// `mss_bytes` is the on-wire packet size; the default 1514 B is a full
/// Ethernet frame. `ack_ratio` is the number of segments acknowledged per
/// (delayed) ACK.
struct TcpParams {
    double mss_bytes = 1514.0;
    double rtt_s = 0.1;
    double ack_ratio = 2.0;
    Flavor flavor = Flavor::Reno;

    double mss_bits() const { return 8.0 * mss_bytes; }

    /// Throws std::invalid_argument if any invariant is violated.
    void validate() const;
    bool operator==(const TcpParams&) const = default;
};

/// Bit rate of a window-limited flow: mss_bits * cwnd / rtt.
double flow_rate(double cwnd, const TcpParams& params);

/// Square-root law with uncompensated delayed ACKs: sqrt(3/(2a)) / sqrt(p_loss).
double reno_expected_cwnd(double p_loss, double ack_ratio);
double reno_expected_rate(double p_loss, const TcpParams& params);

/// Loss probability at which a Reno flow settles at `target_bps`.
/// A result above 1 means the rate is unreachable for this MSS/RTT.
double reno_required_loss(double target_bps, const TcpParams& params);

/// Cubic response function, 1.17 * (rtt/p)^(3/4) with rtt in seconds.
double cubic_expected_cwnd(double p_loss, double rtt_s);
double cubic_expected_rate(double p_loss, const TcpParams& params);
double cubic_required_loss(double target_bps, const TcpParams& params);

/// Dispatches on params.flavor.
double expected_cwnd(double p_loss, const TcpParams& params);
double required_loss(double target_bps, const TcpParams& params);

} // namespace tcpshare
