#pragma once

// On-disk run format.
//
//   <run_id>.trace.csv   header "t_end_s,flow_id,bytes", one row per
//                        (interval, flow), ascending in (t_end_s, flow_id)
//   <run_id>.meta.json   config, seed, per-flow counters, engine version
//
// run_id is the first 16 hex digits of SHA-256 over the canonical JSON of
// {config, seed, engine_version}.

#include "tcpshare/scenario.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcpshare {

class TraceIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunRecord {
    std::string run_id;
    ScenarioConfig config;
    std::vector<FlowCounters> counters;
    std::filesystem::path trace_csv;
    std::filesystem::path meta_json;
};

/// First 16 hex digits of SHA-256 over `text`.
std::string content_id(std::string_view text);

std::string compute_run_id(const ScenarioConfig& cfg, std::string_view engine_version = kEngineVersion);

/// Writes both files into `directory` (created if missing).
RunRecord write_trace(const RateTrace& trace, const std::filesystem::path& directory);

/// Reads `<stem>.trace.csv` and its sibling `<stem>.meta.json`. Accepts either
/// file path or the bare `<dir>/<run_id>` stem. A different engine version is
/// reported through `warnings`, not as an error.
RateTrace read_trace(const std::filesystem::path& source, std::vector<std::string>* warnings = nullptr);

/// Sibling paths for a trace stem or either of its files.
std::filesystem::path trace_csv_path(const std::filesystem::path& source);
std::filesystem::path meta_json_path(const std::filesystem::path& source);

} // namespace tcpshare
