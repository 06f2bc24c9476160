#include "tcpshare/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tcpshare {

IntervalSeries reaggregate(const RateTrace& trace, double interval_s, std::size_t flow,
                           std::optional<double> skip_s)
{
    if (flow >= trace.flow_count()) throw std::invalid_argument("flow index out of range");
    const double ratio = interval_s / trace.interval_s;
    const double factor = std::round(ratio);
    if (factor < 1.0 || std::abs(ratio - factor) > 1e-9) {
        throw std::invalid_argument("interval must be a whole multiple of the trace interval");
    }
    const double skip = skip_s.value_or(trace.config.warmup_s);
    const auto first = static_cast<std::size_t>(std::ceil(skip / trace.interval_s - 1e-9));
    const auto group = static_cast<std::size_t>(factor);
    const auto& raw = trace.bytes[flow];

    IntervalSeries series;
    series.interval_s = interval_s;
    if (first >= raw.size()) return series;
    const std::size_t count = (raw.size() - first) / group;
    series.samples_bps.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto begin = raw.begin() + static_cast<std::ptrdiff_t>(first + k * group);
        const std::uint64_t sum = std::accumulate(begin, begin + static_cast<std::ptrdiff_t>(group), std::uint64_t{0});
        series.samples_bps.push_back(static_cast<double>(sum) * 8.0 / interval_s);
    }
    return series;
}

double Histogram::mass() const
{
    return std::accumulate(density.begin(), density.end(), 0.0) * bin_width;
}

Histogram histogram(std::span<const double> samples, double bin_width)
{
    if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
    Histogram h;
    h.bin_width = bin_width;
    if (samples.empty()) return h;
    const double hi = *std::max_element(samples.begin(), samples.end());
    h.density.assign(static_cast<std::size_t>(std::floor(hi / bin_width)) + 1, 0.0);
    for (double x : samples) {
        if (x < 0.0) throw std::invalid_argument("histogram samples must be non-negative");
        h.density[static_cast<std::size_t>(std::floor(x / bin_width))] += 1.0;
    }
    const double norm = static_cast<double>(samples.size()) * bin_width;
    for (double& d : h.density) d /= norm;
    return h;
}

double nearest_rank_quantile(std::span<const double> samples, double q)
{
    if (samples.empty()) throw std::invalid_argument("quantile of an empty series");
    std::vector<double> sorted(samples.begin(), samples.end());
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
    return sorted[rank - 1];
}

SummaryStats summary(std::span<const double> samples)
{
    if (samples.empty()) throw std::invalid_argument("summary of an empty series");
    SummaryStats s;
    const auto n = static_cast<double>(samples.size());
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double var = 0.0;
    for (double x : samples) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / n);
    s.q05 = nearest_rank_quantile(samples, 0.05);
    s.q50 = nearest_rank_quantile(samples, 0.50);
    s.q95 = nearest_rank_quantile(samples, 0.95);
    return s;
}

std::vector<double> default_intervals()
{
    return {1, 4, 16, 30, 60, 120, 300, 600};
}

std::vector<CurvePoint> stddev_vs_interval(const RateTrace& trace, std::span<const double> intervals_s,
                                           std::size_t flow)
{
    std::vector<CurvePoint> curve;
    for (double t : intervals_s) {
        const IntervalSeries series = reaggregate(trace, t, flow);
        if (series.samples_bps.empty()) {
            throw std::invalid_argument("trace too short for a " + std::to_string(t) + " s interval");
        }
        curve.push_back({t, summary(series.samples_bps).stddev});
    }
    return curve;
}

double sawtooth_interval(double p_loss, double mean_rate_bps, double mss_bytes)
{
    if (!(p_loss > 0.0 && mean_rate_bps > 0.0 && mss_bytes > 0.0)) {
        throw std::invalid_argument("sawtooth interval needs positive inputs");
    }
    const double packet_rate = mean_rate_bps / (8.0 * mss_bytes);
    return 1.0 / (p_loss * packet_rate);
}

std::optional<double> convergence_interval_50(std::span<const CurvePoint> curve)
{
    if (curve.size() < 2) throw std::invalid_argument("convergence curve needs at least two points");
    const double half = 0.5 * curve.front().stddev_bps;
    for (std::size_t k = 1; k < curve.size(); ++k) {
        const CurvePoint& b = curve[k];
        if (b.stddev_bps > half) continue;
        const CurvePoint& a = curve[k - 1];
        const double span = a.stddev_bps - b.stddev_bps;
        const double frac = span > 0.0 ? (a.stddev_bps - half) / span : 1.0;
        const double log_t = std::log(a.interval_s) + frac * (std::log(b.interval_s) - std::log(a.interval_s));
        return std::exp(log_t);
    }
    return std::nullopt;
}

} // namespace tcpshare
