#include "tcpshare/markov_chain.hpp"

#include "tcpshare/tcp_formulas.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tcpshare {

namespace {

constexpr double kResidualBound = 1e-10;
constexpr double kNegativeClamp = 1e-12;

} // namespace

void ChainSpec::validate() const
{
    if (!(p_loss > 0.0 && p_loss < 1.0)) {
        throw std::invalid_argument("chain p_loss must lie in (0, 1), got " + std::to_string(p_loss));
    }
    if (!(ack_ratio >= 1.0)) throw std::invalid_argument("chain ack ratio must be >= 1");
    if (cwnd_max != 0 && cwnd_max < 4) {
        throw std::invalid_argument("cwnd_max must be >= 4, got " + std::to_string(cwnd_max));
    }
    if (!(rtt_s > 0.0)) throw std::invalid_argument("chain rtt_s must be positive");
    if (!(mss_bytes > 0.0)) throw std::invalid_argument("chain mss_bytes must be positive");
}

int auto_cwnd_max(double p_loss, double ack_ratio)
{
    const double target = 8.0 * reno_expected_cwnd(p_loss, ack_ratio);
    int n = 4;
    while (n < target) n *= 2;
    return n;
}

ChainSpec resolve(ChainSpec spec)
{
    spec.validate();
    if (spec.cwnd_max == 0) spec.cwnd_max = auto_cwnd_max(spec.p_loss, spec.ack_ratio);
    return spec;
}

int halving_target(int state)
{
    return std::max(kMinWindowState, state / 2);
}

TransitionMatrix::TransitionMatrix(const ChainSpec& spec)
    : spec_(resolve(spec))
{
    const int lo = kMinWindowState;
    const int hi = spec_.cwnd_max;
    const double big_p = spec_.shortcut();
    const auto n = static_cast<std::size_t>(spec_.state_count());
    out_.assign(n, 0.0);
    inflows_.assign(n, {});

    for (int j = lo; j <= hi; ++j) {
        // increment j -> j+1; the top state cannot grow
        if (j < hi) {
            inflows_[index(j + 1)].push_back({j, 1.0});
            out_[index(j)] += 1.0;
        }
        // halving j -> max(2, j/2); state 2 cannot be halved
        if (j > lo) {
            const double r = j * big_p;
            inflows_[index(halving_target(j))].push_back({j, r});
            out_[index(j)] += r;
        }
    }
    for (auto& row : inflows_) {
        std::sort(row.begin(), row.end(), [](const Inflow& a, const Inflow& b) { return a.from < b.from; });
    }
}

std::size_t TransitionMatrix::index(int state) const
{
    if (state < kMinWindowState || state > spec_.cwnd_max) {
        throw std::out_of_range("window state " + std::to_string(state) + " outside chain");
    }
    return static_cast<std::size_t>(state - kMinWindowState);
}

double TransitionMatrix::rate(int to, int from) const
{
    for (const auto& in : inflows(to)) {
        if (in.from == from) return in.rate;
    }
    return 0.0;
}

std::vector<double> TransitionMatrix::to_dense() const
{
    const std::size_t n = size();
    std::vector<double> dense(n * n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (const auto& in : inflows_[r]) {
            dense[r * n + static_cast<std::size_t>(in.from - kMinWindowState)] = in.rate / out_[r];
        }
    }
    return dense;
}

TransitionMatrix build_transition_matrix(const ChainSpec& spec)
{
    return TransitionMatrix(spec);
}

double StateDistribution::at(int state) const
{
    if (state < first_state() || state > last_state()) return 0.0;
    return probabilities[static_cast<std::size_t>(state - kMinWindowState)];
}

double StateDistribution::mean_cwnd() const
{
    double m = 0.0;
    for (std::size_t k = 0; k < probabilities.size(); ++k) {
        m += static_cast<double>(k + kMinWindowState) * probabilities[k];
    }
    return m;
}

StateDistribution solve_equilibrium(const TransitionMatrix& matrix)
{
    const std::size_t n = matrix.size();
    // (A - I) p = 0, first row (state 2) replaced by sum(p) = 1.
    std::vector<double> m = matrix.to_dense();
    for (std::size_t r = 0; r < n; ++r) m[r * n + r] -= 1.0;
    std::fill(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n), 1.0);
    std::vector<double> rhs(n, 0.0);
    rhs[0] = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(m[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(m[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (!(best > 1e-300)) throw SolverError("equilibrium system is singular");
        if (pivot != col) {
            std::swap_ranges(m.begin() + static_cast<std::ptrdiff_t>(col * n),
                             m.begin() + static_cast<std::ptrdiff_t>(col * n + n),
                             m.begin() + static_cast<std::ptrdiff_t>(pivot * n));
            std::swap(rhs[col], rhs[pivot]);
        }
        const double* prow = &m[col * n];
        for (std::size_t r = col + 1; r < n; ++r) {
            double* row = &m[r * n];
            const double factor = row[col] / prow[col];
            // the system is upper Hessenberg, so almost every multiplier is zero
            if (factor == 0.0) continue;
            row[col] = 0.0;
            for (std::size_t c = col + 1; c < n; ++c) row[c] -= factor * prow[c];
            rhs[r] -= factor * rhs[col];
        }
    }

    std::vector<double> p(n, 0.0);
    for (std::size_t k = n; k-- > 0;) {
        const double* row = &m[k * n];
        double acc = rhs[k];
        for (std::size_t c = k + 1; c < n; ++c) acc -= row[c] * p[c];
        p[k] = acc / row[k];
    }

    for (double& v : p) {
        if (!std::isfinite(v)) throw SolverError("equilibrium solution is not finite");
        if (v < 0.0) {
            if (v < -kNegativeClamp) throw SolverError("equilibrium solution has negative mass");
            v = 0.0;
        }
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= total;

    StateDistribution dist{matrix.spec(), std::move(p)};

    double residual = 0.0;
    for (int i = matrix.first_state(); i <= matrix.last_state(); ++i) {
        double fixed_point = 0.0;
        for (const auto& in : matrix.inflows(i)) fixed_point += in.rate * dist.at(in.from);
        fixed_point /= matrix.out_rate(i);
        residual = std::max(residual, std::abs(fixed_point - dist.at(i)));
    }
    residual = std::max(residual, balance_residual(matrix, dist));
    if (residual > kResidualBound) {
        throw SolverError("equilibrium residual " + std::to_string(residual) + " exceeds bound");
    }
    return dist;
}

StateDistribution solve_chain(const ChainSpec& spec)
{
    return solve_equilibrium(build_transition_matrix(spec));
}

double balance_residual(const TransitionMatrix& matrix, const StateDistribution& dist)
{
    double worst = 0.0;
    for (int i = matrix.first_state(); i <= matrix.last_state(); ++i) {
        double inflow = 0.0;
        for (const auto& in : matrix.inflows(i)) inflow += in.rate * dist.at(in.from);
        worst = std::max(worst, std::abs(dist.at(i) * matrix.out_rate(i) - inflow));
    }
    return worst;
}

DiscretePmf rate_distribution(const StateDistribution& dist)
{
    TcpParams params;
    params.mss_bytes = dist.spec.mss_bytes;
    params.rtt_s = dist.spec.rtt_s;
    params.ack_ratio = dist.spec.ack_ratio;
    DiscretePmf pmf;
    pmf.support.reserve(dist.probabilities.size());
    for (int i = dist.first_state(); i <= dist.last_state(); ++i) {
        pmf.support.push_back(flow_rate(i, params));
    }
    pmf.mass = dist.probabilities;
    return pmf;
}

DiscretePmf window_distribution(const StateDistribution& dist)
{
    DiscretePmf pmf;
    for (int i = dist.first_state(); i <= dist.last_state(); ++i) pmf.support.push_back(i);
    pmf.mass = dist.probabilities;
    return pmf;
}

double pmf_quantile(const DiscretePmf& pmf, double q)
{
    if (pmf.support.empty()) throw std::invalid_argument("quantile of an empty distribution");
    double cdf = 0.0;
    for (std::size_t k = 0; k < pmf.support.size(); ++k) {
        cdf += pmf.mass[k];
        if (cdf >= q - 1e-12) return pmf.support[k];
    }
    return pmf.support.back();
}

DistributionStats distribution_stats(const DiscretePmf& pmf)
{
    DistributionStats s;
    for (std::size_t k = 0; k < pmf.support.size(); ++k) s.mean += pmf.support[k] * pmf.mass[k];
    double var = 0.0;
    for (std::size_t k = 0; k < pmf.support.size(); ++k) {
        const double d = pmf.support[k] - s.mean;
        var += d * d * pmf.mass[k];
    }
    s.stddev = std::sqrt(var);
    s.q05 = pmf_quantile(pmf, 0.05);
    s.q50 = pmf_quantile(pmf, 0.50);
    s.q95 = pmf_quantile(pmf, 0.95);
    return s;
}

double lognormal_cdf(double cwnd, double e_cwnd, double sigma)
{
    if (cwnd <= 0.0) return 0.0;
    const double z = std::log(cwnd / e_cwnd) / sigma;
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double ks_distance(const StateDistribution& dist, double e_cwnd, double sigma)
{
    double below = 0.0; // P(state < x)
    double worst = 0.0;
    for (int x = dist.first_state(); x <= dist.last_state() + 1; ++x) {
        worst = std::max(worst, std::abs(below - lognormal_cdf(x, e_cwnd, sigma)));
        below += dist.at(x);
    }
    return worst;
}

} // namespace tcpshare
