#include "tcpshare/tcp_formulas.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tcpshare {

namespace {

constexpr double kCubicScale = 1.17;

void check_loss(double p_loss)
{
    if (!(p_loss > 0.0 && p_loss <= 1.0)) {
        throw std::invalid_argument("loss probability must lie in (0, 1], got " +
                                    std::to_string(p_loss));
    }
}

void check_target(double target_bps)
{
    if (!(target_bps > 0.0) || !std::isfinite(target_bps)) {
        throw std::invalid_argument("target rate must be positive and finite");
    }
}

} // namespace

std::string_view to_string(Flavor flavor)
{
    return flavor == Flavor::Reno ? "reno" : "cubic";
}

Flavor parse_flavor(std::string_view text)
{
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "reno") return Flavor::Reno;
    if (lower == "cubic") return Flavor::Cubic;
    throw std::invalid_argument("unknown TCP flavor '" + std::string(text) + "'");
}

void TcpParams::validate() const
{
    if (!(mss_bytes > 0.0)) throw std::invalid_argument("mss_bytes must be positive");
    if (!(rtt_s > 0.0)) throw std::invalid_argument("rtt_s must be positive");
    if (!(ack_ratio >= 1.0)) throw std::invalid_argument("ack ratio must be >= 1");
}

double flow_rate(double cwnd, const TcpParams& params)
{
    return params.mss_bits() * cwnd / params.rtt_s;
}

double reno_expected_cwnd(double p_loss, double ack_ratio)
{
    check_loss(p_loss);
    return std::sqrt(3.0 / (2.0 * ack_ratio)) / std::sqrt(p_loss);
}

double reno_expected_rate(double p_loss, const TcpParams& params)
{
    return flow_rate(reno_expected_cwnd(p_loss, params.ack_ratio), params);
}

double reno_required_loss(double target_bps, const TcpParams& params)
{
    check_target(target_bps);
    const double ratio = params.mss_bits() / (target_bps * params.rtt_s);
    return 3.0 / (2.0 * params.ack_ratio) * ratio * ratio;
}

double cubic_expected_cwnd(double p_loss, double rtt_s)
{
    check_loss(p_loss);
    if (!(rtt_s > 0.0)) throw std::invalid_argument("rtt_s must be positive");
    return kCubicScale * std::pow(rtt_s / p_loss, 0.75);
}

double cubic_expected_rate(double p_loss, const TcpParams& params)
{
    return flow_rate(cubic_expected_cwnd(p_loss, params.rtt_s), params);
}

double cubic_required_loss(double target_bps, const TcpParams& params)
{
    check_target(target_bps);
    // window needed for the target, then invert 1.17 * (rtt/p)^(3/4) = w
    const double window = target_bps * params.rtt_s / params.mss_bits();
    return params.rtt_s / std::pow(window / kCubicScale, 4.0 / 3.0);
}

double expected_cwnd(double p_loss, const TcpParams& params)
{
    return params.flavor == Flavor::Reno ? reno_expected_cwnd(p_loss, params.ack_ratio)
                                         : cubic_expected_cwnd(p_loss, params.rtt_s);
}

double required_loss(double target_bps, const TcpParams& params)
{
    return params.flavor == Flavor::Reno ? reno_required_loss(target_bps, params)
                                         : cubic_required_loss(target_bps, params);
}

} // namespace tcpshare
