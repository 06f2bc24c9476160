#include "tcpshare/trace_store.hpp"

#include "json.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace tcpshare {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kCsvHeader = "t_end_s,flow_id,bytes";
constexpr std::string_view kTraceSuffix = ".trace.csv";
constexpr std::string_view kMetaSuffix = ".meta.json";

std::string sha256_hex(std::string_view data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string stem_of(const fs::path& source)
{
    std::string s = source.string();
    for (std::string_view suffix : {kTraceSuffix, kMetaSuffix}) {
        if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
            return s.substr(0, s.size() - suffix.size());
        }
    }
    return s;
}

json counters_to_json(const FlowCounters& c)
{
    return json{{"sent", c.sent},
                {"delivered", c.delivered},
                {"dropped", c.dropped},
                {"in_flight_at_end", c.in_flight_at_end},
                {"retransmits", c.retransmits},
                {"window_reductions", c.window_reductions},
                {"stalls", c.stalls},
                {"delivered_bytes", c.delivered_bytes}};
}

FlowCounters counters_from_json(const json& j)
{
    FlowCounters c;
    c.sent = j.at("sent").get<std::uint64_t>();
    c.delivered = j.at("delivered").get<std::uint64_t>();
    c.dropped = j.at("dropped").get<std::uint64_t>();
    c.in_flight_at_end = j.at("in_flight_at_end").get<std::uint64_t>();
    c.retransmits = j.at("retransmits").get<std::uint64_t>();
    c.window_reductions = j.at("window_reductions").get<std::uint64_t>();
    c.stalls = j.at("stalls").get<std::uint64_t>();
    c.delivered_bytes = j.at("delivered_bytes").get<std::uint64_t>();
    return c;
}

template <typename T>
T parse_number(std::string_view field, const fs::path& path, std::size_t line)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw TraceIoError(fmt::format("{}:{}: malformed field '{}'", path.string(), line, field));
    }
    return value;
}

} // namespace

fs::path trace_csv_path(const fs::path& source)
{
    return stem_of(source) + std::string(kTraceSuffix);
}

fs::path meta_json_path(const fs::path& source)
{
    return stem_of(source) + std::string(kMetaSuffix);
}

std::string content_id(std::string_view text)
{
    return sha256_hex(text).substr(0, 16);
}

std::string compute_run_id(const ScenarioConfig& cfg, std::string_view engine_version)
{
    const json identity{{"config", json::parse(config_to_json(cfg))},
                        {"seed", cfg.seed},
                        {"engine_version", std::string(engine_version)}};
    return content_id(identity.dump());
}

RunRecord write_trace(const RateTrace& trace, const fs::path& directory)
{
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw TraceIoError(fmt::format("cannot create {}: {}", directory.string(), ec.message()));

    RunRecord rec;
    rec.run_id = compute_run_id(trace.config, trace.engine_version);
    rec.config = trace.config;
    rec.counters = trace.counters;
    rec.trace_csv = directory / (rec.run_id + std::string(kTraceSuffix));
    rec.meta_json = directory / (rec.run_id + std::string(kMetaSuffix));

    {
        std::ofstream out(rec.trace_csv, std::ios::binary | std::ios::trunc);
        if (!out) throw TraceIoError("cannot open " + rec.trace_csv.string() + " for writing");
        out << kCsvHeader << '\n';
        fmt::memory_buffer buf;
        for (std::size_t k = 0; k < trace.interval_count(); ++k) {
            const double t_end = static_cast<double>(k + 1) * trace.interval_s;
            for (std::size_t f = 0; f < trace.flow_count(); ++f) {
                fmt::format_to(std::back_inserter(buf), "{},{},{}\n", t_end, f, trace.bytes[f][k]);
            }
            if (buf.size() > (1u << 16)) {
                out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
                buf.clear();
            }
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw TraceIoError("write failed for " + rec.trace_csv.string());
    }

    json counters = json::array();
    for (const auto& c : trace.counters) counters.push_back(counters_to_json(c));
    const json meta{{"run_id", rec.run_id},
                    {"engine_version", trace.engine_version},
                    {"seed", trace.config.seed},
                    {"interval_s", trace.interval_s},
                    {"flow_count", trace.flow_count()},
                    {"interval_count", trace.interval_count()},
                    {"config", json::parse(config_to_json(trace.config))},
                    {"counters", counters}};
    std::ofstream out(rec.meta_json, std::ios::trunc);
    if (!out) throw TraceIoError("cannot open " + rec.meta_json.string() + " for writing");
    out << meta.dump(2) << '\n';
    if (!out) throw TraceIoError("write failed for " + rec.meta_json.string());
    return rec;
}

RateTrace read_trace(const fs::path& source, std::vector<std::string>* warnings)
{
    const fs::path csv_path = trace_csv_path(source);
    const fs::path meta_path = meta_json_path(source);
    if (!fs::exists(csv_path)) throw TraceIoError("trace file not found: " + csv_path.string());
    if (!fs::exists(meta_path)) {
        throw TraceIoError("metadata file not found: expected " + meta_path.string() + " next to " +
                           csv_path.string());
    }

    json meta;
    {
        std::ifstream in(meta_path);
        try {
            meta = json::parse(in);
        } catch (const json::exception& e) {
            throw TraceIoError(meta_path.string() + ": " + e.what());
        }
    }

    RateTrace trace;
    std::size_t flows = 0;
    std::size_t intervals = 0;
    try {
        trace.engine_version = meta.at("engine_version").get<std::string>();
        trace.interval_s = meta.at("interval_s").get<double>();
        trace.config = config_from_json(meta.at("config").dump());
        flows = meta.at("flow_count").get<std::size_t>();
        intervals = meta.at("interval_count").get<std::size_t>();
        for (const auto& c : meta.at("counters")) trace.counters.push_back(counters_from_json(c));
    } catch (const std::exception& e) {
        throw TraceIoError(meta_path.string() + ": " + e.what());
    }
    if (trace.engine_version != kEngineVersion && warnings) {
        warnings->push_back(fmt::format("{} was written by '{}', this is '{}'", meta_path.string(),
                                        trace.engine_version, kEngineVersion));
    }
    if (trace.counters.size() != flows) throw TraceIoError(meta_path.string() + ": counter count mismatch");

    trace.bytes.assign(flows, std::vector<std::uint64_t>(intervals, 0));
    std::ifstream in(csv_path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw TraceIoError(fmt::format("{}:1: expected header '{}'", csv_path.string(), kCsvHeader));
    }
    const std::size_t expected_rows = flows * intervals;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw TraceIoError(fmt::format("{}:{}: expected 3 fields", csv_path.string(), lineno));
        }
        const std::string_view view(line);
        const auto t_end = parse_number<double>(view.substr(0, c1), csv_path, lineno);
        const auto flow = parse_number<std::size_t>(view.substr(c1 + 1, c2 - c1 - 1), csv_path, lineno);
        const auto bytes = parse_number<std::uint64_t>(view.substr(c2 + 1), csv_path, lineno);
        if (rows >= expected_rows) {
            throw TraceIoError(fmt::format("{}:{}: more rows than metadata declares", csv_path.string(), lineno));
        }
        const std::size_t k = rows / flows;
        const std::size_t f = rows % flows;
        const double want_t = static_cast<double>(k + 1) * trace.interval_s;
        if (flow != f || std::abs(t_end - want_t) > 1e-6 * std::max(1.0, want_t)) {
            throw TraceIoError(fmt::format("{}:{}: rows out of order (expected t_end_s={}, flow_id={})",
                                           csv_path.string(), lineno, want_t, f));
        }
        trace.bytes[f][k] = bytes;
        ++rows;
    }
    if (rows != expected_rows) {
        throw TraceIoError(fmt::format("{}:{}: truncated trace, {} of {} rows", csv_path.string(), lineno, rows,
                                       expected_rows));
    }
    for (std::size_t f = 0; f < flows; ++f) {
        std::uint64_t sum = 0;
        for (auto b : trace.bytes[f]) sum += b;
        if (sum != trace.counters[f].delivered_bytes) {
            throw TraceIoError(fmt::format("{}: flow {} carries {} bytes but counters say {}", csv_path.string(), f,
                                           sum, trace.counters[f].delivered_bytes));
        }
    }
    return trace;
}

} // namespace tcpshare
