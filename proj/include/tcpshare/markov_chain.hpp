#pragma once

// Continuous-time Markov chain of the congestion window under i.i.d.
// per-packet loss.
//
// States are integer windows 2..cwnd_max (state 1 is unreachable because the
// window never drops below 2, so it is left out). Time is rescaled by a*RTT,
// which makes the increment rate exactly 1 and the halving rate of state i
// equal to i*P with P = a * p_loss.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tcpshare {

inline constexpr int kMinWindowState = 2;
/// Logarithmic standard deviation of the log-normal window approximation.
inline constexpr double kLognormalSigma = 0.41;

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ChainSpec {
    double p_loss = 1e-4;
    double ack_ratio = 2.0;
    int cwnd_max = 0; ///< 0 selects auto_cwnd_max()
    double rtt_s = 0.1;
    double mss_bytes = 1514.0;

    /// The shortcut P = a * p_loss. Always derived, never stored.
    double shortcut() const { return ack_ratio * p_loss; }
    int state_count() const { return cwnd_max - kMinWindowState + 1; }

    void validate() const;
};

/// Smallest power of two >= 8 * reno_expected_cwnd(p_loss, a), at least 4.
int auto_cwnd_max(double p_loss, double ack_ratio);

/// Copy of `spec` with cwnd_max filled in when it was left at 0.
ChainSpec resolve(ChainSpec spec);

/// Destination of a halving from state i >= 3: max(2, floor(i/2)).
int halving_target(int state);

/// Transition structure of the chain.
///
/// Stored sparsely by destination row. `at(i, j)` is the normalized matrix
/// entry rate(j -> i) / out(i); `rate(i, j)` is the raw rate.
class TransitionMatrix {
public:
    struct Inflow {
        int from;
        double rate;
    };

    explicit TransitionMatrix(const ChainSpec& spec);

    const ChainSpec& spec() const { return spec_; }
    int first_state() const { return kMinWindowState; }
    int last_state() const { return spec_.cwnd_max; }
    std::size_t size() const { return inflows_.size(); }

    double out_rate(int state) const { return out_[index(state)]; }
    const std::vector<Inflow>& inflows(int state) const { return inflows_[index(state)]; }

    double rate(int to, int from) const;
    double at(int to, int from) const { return rate(to, from) / out_rate(to); }

    /// Row-major dense copy of the normalized matrix.
    std::vector<double> to_dense() const;

private:
    std::size_t index(int state) const;

    ChainSpec spec_;
    std::vector<double> out_;
    std::vector<std::vector<Inflow>> inflows_;
};

/// Rejects cwnd_max < 4 (after auto-resolution) with std::invalid_argument.
TransitionMatrix build_transition_matrix(const ChainSpec& spec);

struct StateDistribution {
    ChainSpec spec;
    std::vector<double> probabilities; ///< index k holds state k + 2

    int first_state() const { return kMinWindowState; }
    int last_state() const { return kMinWindowState + static_cast<int>(probabilities.size()) - 1; }
    double at(int state) const;
    double mean_cwnd() const;
};

/// Solves p = A p with the state-2 equation replaced by sum(p) = 1, using
/// Gaussian elimination with partial pivoting on the dense system. Throws
/// SolverError when the system is singular or the balance residual exceeds
/// 1e-10.
StateDistribution solve_equilibrium(const TransitionMatrix& matrix);

/// Convenience: build + solve.
StateDistribution solve_chain(const ChainSpec& spec);

/// max_i |p_i * out(i) - sum of inflow rates into i|.
double balance_residual(const TransitionMatrix& matrix, const StateDistribution& dist);

/// Discrete distribution over arbitrary support points (ascending).
struct DiscretePmf {
    std::vector<double> support;
    std::vector<double> mass;
};

/// Maps state i to flow_rate(i) with probability p_i.
DiscretePmf rate_distribution(const StateDistribution& dist);
/// Maps state i to the window value i.
DiscretePmf window_distribution(const StateDistribution& dist);

struct DistributionStats {
    double mean = 0;
    double stddev = 0;
    double q05 = 0;
    double q50 = 0;
    double q95 = 0;
};

/// Smallest support point whose CDF reaches q.
double pmf_quantile(const DiscretePmf& pmf, double q);
DistributionStats distribution_stats(const DiscretePmf& pmf);

/// Phi(ln(cwnd / e_cwnd) / sigma).
double lognormal_cdf(double cwnd, double e_cwnd, double sigma);

/// Kolmogorov distance between the chain's window CDF and the log-normal.
///
/// State i is read as covering windows in [i, i+1), so the chain CDF at the
/// boundary x is P(state < x). The distance is the largest gap over the
/// boundaries x = 2 .. cwnd_max + 1.
double ks_distance(const StateDistribution& dist, double e_cwnd, double sigma);

} // namespace tcpshare
