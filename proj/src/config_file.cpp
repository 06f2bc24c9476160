#include "tcpshare/config_file.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace tcpshare {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct Located {
    std::string value;
    std::size_t line;
};

using Section = std::map<std::string, Located, std::less<>>;

class Reader {
public:
    Reader(std::string_view origin, Section section) : origin_(origin), section_(std::move(section)) {}

    bool has(std::string_view key) const { return section_.count(key) != 0; }

    double number(std::string_view key, double fallback)
    {
        auto it = section_.find(key);
        if (it == section_.end()) return fallback;
        used_.push_back(it->first);
        const std::string& v = it->second.value;
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size()) fail(it->second.line, fmt::format("'{}' is not a number", v));
        return out;
    }

    std::uint64_t integer(std::string_view key, std::uint64_t fallback)
    {
        auto it = section_.find(key);
        if (it == section_.end()) return fallback;
        used_.push_back(it->first);
        const std::string& v = it->second.value;
        std::uint64_t out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
            fail(it->second.line, fmt::format("'{}' is not a non-negative integer", v));
        }
        return out;
    }

    template <typename Fn>
    auto text(std::string_view key, Fn parse, decltype(parse(std::string_view{})) fallback)
    {
        auto it = section_.find(key);
        if (it == section_.end()) return fallback;
        used_.push_back(it->first);
        try {
            return parse(it->second.value);
        } catch (const std::invalid_argument& e) {
            fail(it->second.line, e.what());
        }
    }

    void reject_unknown() const
    {
        for (const auto& [key, loc] : section_) {
            if (std::find(used_.begin(), used_.end(), key) == used_.end()) fail(loc.line, "unknown key '" + key + "'");
        }
    }

    [[noreturn]] void fail(std::size_t line, const std::string& msg) const
    {
        throw ConfigError(fmt::format("{}:{}: {}", origin_, line, msg));
    }

private:
    std::string origin_;
    Section section_;
    std::vector<std::string> used_;
};

} // namespace

ScenarioConfig parse_config(std::string_view text, std::string_view origin)
{
    Section global;
    std::vector<std::pair<std::size_t, Section>> flow_sections;
    Section* current = &global;

    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line != "[flow]") {
                throw ConfigError(fmt::format("{}:{}: unknown section '{}'", origin, lineno, line));
            }
            flow_sections.emplace_back(lineno, Section{});
            current = &flow_sections.back().second;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(fmt::format("{}:{}: expected 'key = value'", origin, lineno));
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty() || value.empty()) {
            throw ConfigError(fmt::format("{}:{}: expected 'key = value'", origin, lineno));
        }
        if (!current->emplace(key, Located{value, lineno}).second) {
            throw ConfigError(fmt::format("{}:{}: duplicate key '{}'", origin, lineno, key));
        }
    }

    Reader g(origin, std::move(global));
    ScenarioConfig cfg;
    cfg.scenario = g.text("scenario", parse_scenario, Scenario::RandomDrop);
    cfg.p_loss = g.number("p_loss", 0.0);
    cfg.duration_s = g.number("duration_s", cfg.duration_s);
    cfg.seed = g.integer("seed", cfg.seed);
    cfg.loss_reaction = g.text("loss_reaction", parse_loss_reaction,
                               cfg.scenario == Scenario::RandomDrop ? LossReaction::PerLoss : LossReaction::PerWindow);
    cfg.interval_s = g.number("interval_s", cfg.interval_s);
    cfg.warmup_s = g.number("warmup_s", cfg.warmup_s);
    cfg.repetitions = static_cast<int>(g.integer("repetitions", 0));
    cfg.idle_gap_s = g.number("idle_gap_s", cfg.idle_gap_s);
    if (g.has("tx_jitter_s")) cfg.tx_jitter_s = g.number("tx_jitter_s", 0.0);
    const double base_rtt = g.number("base_rtt_s", 0.1);
    if (cfg.scenario != Scenario::RandomDrop) {
        const double capacity = g.number("capacity_bps", 20e6);
        LinkSpec link = LinkSpec::with_bdp_buffer(capacity, base_rtt);
        link.buffer_bytes = g.number("buffer_bytes", link.buffer_bytes);
        cfg.link = link;
    }
    g.reject_unknown();

    for (auto& [line, section] : flow_sections) {
        Reader f(origin, std::move(section));
        FlowConfig flow;
        flow.tcp.flavor = f.text("flavor", parse_flavor, Flavor::Reno);
        flow.tcp.mss_bytes = f.number("mss_bytes", flow.tcp.mss_bytes);
        flow.tcp.rtt_s = f.number("rtt_s", base_rtt);
        flow.tcp.ack_ratio = f.number("ack_ratio", flow.tcp.ack_ratio);
        flow.initial_cwnd = f.number("initial_cwnd", flow.initial_cwnd);
        if (f.has("volume_bytes")) flow.volume_bytes = f.number("volume_bytes", 0.0);
        const auto count = f.integer("count", 1);
        f.reject_unknown();
        if (count == 0) throw ConfigError(fmt::format("{}:{}: flow count must be at least 1", origin, line));
        for (std::uint64_t i = 0; i < count; ++i) cfg.flows.push_back(flow);
    }

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("{}: {}", origin, e.what()));
    }
    return cfg;
}

ScenarioConfig load_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

} // namespace tcpshare
