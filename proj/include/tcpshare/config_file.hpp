#pragma once

// Plain-text scenario description, one `key = value` per line.
//
//   # comment
//   scenario      = shared          # random-drop | shared | finite-flow
//   capacity_bps  = 20e6
//   base_rtt_s    = 0.1
//   buffer_bytes  = 250000          # optional, defaults to the BDP
//   p_loss        = 1.1e-4          # random-drop only
//   duration_s    = 7200
//   seed          = 7
//   loss_reaction = per-window      # per-loss | per-window
//   interval_s    = 1
//   warmup_s      = 300
//   repetitions   = 500             # finite-flow only
//   idle_gap_s    = 5               # finite-flow only
//   tx_jitter_s   = 0.0006          # optional, defaults to one packet time
//
//   [flow]                          # repeatable
//   flavor       = reno             # reno | cubic
//   count        = 2                # copies of this flow, default 1
//   mss_bytes    = 1514
//   rtt_s        = 0.1              # defaults to base_rtt_s
//   ack_ratio    = 2
//   initial_cwnd = 10
//   volume_bytes = 12e6             # makes the flow finite

#include "tcpshare/scenario.hpp"

#include <filesystem>
#include <stdexcept>
#include <string_view>

namespace tcpshare {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses and validates. `origin` names the source in error messages.
ScenarioConfig parse_config(std::string_view text, std::string_view origin = "<config>");
ScenarioConfig load_config_file(const std::filesystem::path& path);

} // namespace tcpshare
