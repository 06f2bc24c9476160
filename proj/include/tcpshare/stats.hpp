#pragma once

#include "tcpshare/scenario.hpp"

#include <optional>
#include <span>
#include <vector>

namespace tcpshare {

/// Average bit rates over consecutive intervals of equal length.
struct IntervalSeries {
    double interval_s = 1.0;
    std::vector<double> samples_bps;
};

struct SummaryStats {
    double mean = 0.0;
    double stddev = 0.0; ///< population standard deviation
    double q05 = 0.0;
    double q50 = 0.0;
    double q95 = 0.0;
};

/// Sums base-interval byte counts of one flow into intervals of `interval_s`,
/// starting after `skip_s` (defaults to the trace's warm-up). The trailing
/// partial interval is discarded. Throws std::invalid_argument if
/// `interval_s` is not a whole multiple of the trace interval.
IntervalSeries reaggregate(const RateTrace& trace, double interval_s, std::size_t flow = 0,
                           std::optional<double> skip_s = std::nullopt);

struct Histogram {
    double origin = 0.0;
    double bin_width = 1.0;
    std::vector<double> density; ///< per bin, integrates to 1

    double bin_center(std::size_t k) const { return origin + (static_cast<double>(k) + 0.5) * bin_width; }
    double mass() const;
};

/// Density histogram with bins [origin + k w, origin + (k+1) w), origin = 0.
Histogram histogram(std::span<const double> samples, double bin_width);

/// Nearest-rank quantile: the ceil(q n)-th smallest sample.
double nearest_rank_quantile(std::span<const double> samples, double q);

/// Throws std::invalid_argument on an empty series.
SummaryStats summary(std::span<const double> samples);

struct CurvePoint {
    double interval_s;
    double stddev_bps;
};

/// Intervals used for the averaging-time curve when none are given.
std::vector<double> default_intervals();

std::vector<CurvePoint> stddev_vs_interval(const RateTrace& trace, std::span<const double> intervals_s,
                                           std::size_t flow = 0);

/// Mean time between losses, 1 / (p_loss * packet_rate) with
/// packet_rate = mean_rate_bps / (8 * mss_bytes).
double sawtooth_interval(double p_loss, double mean_rate_bps, double mss_bytes);

/// First interval at which the standard deviation has fallen to half its
/// value at the smallest interval, interpolated linearly in stddev against
/// log(interval). Empty if the curve never gets there.
std::optional<double> convergence_interval_50(std::span<const CurvePoint> curve);

} // namespace tcpshare
