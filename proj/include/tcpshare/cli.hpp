#pragma once

// Command implementations behind the `tcpshare` executable. Each command
// validates its options before doing any work, writes its files under the
// output directory and reports progress on the given stream.

#include "tcpshare/markov_chain.hpp"
#include "tcpshare/scenario.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcpshare::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kVerifyFailed = 2, kIoError = 3 };

/// Raised for well-formed input that cannot be analysed (e.g. an empty trace).
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kOutputDirEnv = "TCPSHARE_OUT";

/// The --out flag if given, else $TCPSHARE_OUT, else ./tcpshare-out.
std::filesystem::path output_dir(const std::optional<std::filesystem::path>& flag);

// ---------------------------------------------------------------- solve

struct SolveOptions {
    double p_loss = 0.0;
    double ack_ratio = 2.0;
    double rtt_s = 0.1;
    double mss_bytes = 1514.0;
    int cwnd_max = 0; ///< 0 = auto
    double sigma = kLognormalSigma;
    std::filesystem::path out_dir;
};

struct SolveResult {
    std::string id;
    ChainSpec spec; ///< resolved
    bool cwnd_max_auto = false;
    DistributionStats rate;
    double mean_cwnd = 0.0;
    double expected_cwnd = 0.0; ///< response-function value
    double ks_to_lognormal = 0.0;
    double residual = 0.0;
    std::filesystem::path pmf_csv;
    std::filesystem::path summary_json;
};

SolveResult solve(const SolveOptions& opt);
int cmd_solve(const SolveOptions& opt, std::ostream& out);

// ------------------------------------------------------------- simulate

struct SimulateOptions {
    ScenarioConfig config;
    std::filesystem::path out_dir;
};

int cmd_simulate(const SimulateOptions& opt, std::ostream& out);

/// Parses "2xreno", "reno", "3xcubic,1xreno" into (count, flavor) pairs.
std::vector<std::pair<int, Flavor>> parse_flow_list(std::string_view text);

// -------------------------------------------------------------- analyze

struct AnalyzeOptions {
    std::filesystem::path trace;
    std::vector<double> intervals_s; ///< empty = default set
    double bin_width_bps = 0.5e6;
    std::vector<double> quantiles_pct{5.0, 50.0, 95.0};
    std::size_t flow = 0;
    std::filesystem::path out_dir;
};

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out);

// ------------------------------------------------------------ reproduce

struct ReproduceOptions {
    std::string target;
    bool full = false;
    unsigned jobs = 0; ///< 0 = hardware concurrency
    std::filesystem::path out_dir;
};

const std::vector<std::string>& reproduce_targets();
int cmd_reproduce(const ReproduceOptions& opt, std::ostream& out);

// --------------------------------------------------------------- verify

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    bool fidelity_sensitive = false;
    std::string measured;
    std::string expected;
    double seconds = 0.0;
};

struct VerifyOptions {
    bool quick = false;        ///< skip the multi-minute simulation checks
    std::set<int> only;        ///< empty = all
    double sigma = kLognormalSigma;
    unsigned jobs = 0;
};

/// Criteria that `--quick` keeps.
bool is_quick_check(int id);

std::vector<CheckResult> run_acceptance(const VerifyOptions& opt, std::ostream& log);
std::string format_check(const CheckResult& r);
int cmd_verify(const VerifyOptions& opt, std::ostream& out);

} // namespace tcpshare::cli
