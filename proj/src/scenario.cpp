#include "tcpshare/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tcpshare {

using nlohmann::json;

std::string_view to_string(Scenario s)
{
    switch (s) {
    case Scenario::RandomDrop: return "random-drop";
    case Scenario::SharedBottleneck: return "shared";
    case Scenario::FiniteFlow: return "finite-flow";
    }
    return "?";
}

std::string_view to_string(LossReaction r)
{
    return r == LossReaction::PerLoss ? "per-loss" : "per-window";
}

Scenario parse_scenario(std::string_view text)
{
    if (text == "random-drop" || text == "RandomDrop") return Scenario::RandomDrop;
    if (text == "shared" || text == "SharedBottleneck") return Scenario::SharedBottleneck;
    if (text == "finite-flow" || text == "finite" || text == "FiniteFlow") return Scenario::FiniteFlow;
    throw std::invalid_argument("unknown scenario '" + std::string(text) + "'");
}

LossReaction parse_loss_reaction(std::string_view text)
{
    if (text == "per-loss" || text == "PerLoss") return LossReaction::PerLoss;
    if (text == "per-window" || text == "PerWindow") return LossReaction::PerWindow;
    throw std::invalid_argument("unknown loss reaction mode '" + std::string(text) + "'");
}

LinkSpec LinkSpec::with_bdp_buffer(double capacity_bps, double base_rtt_s)
{
    return LinkSpec{capacity_bps, capacity_bps * base_rtt_s / 8.0, base_rtt_s};
}

void LinkSpec::validate() const
{
    if (!(capacity_bps > 0.0)) throw std::invalid_argument("link capacity must be positive");
    if (!(buffer_bytes > 0.0)) throw std::invalid_argument("link buffer must be positive");
    if (!(base_rtt_s > 0.0)) throw std::invalid_argument("link base RTT must be positive");
}

void ScenarioConfig::validate() const
{
    if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
    if (!(interval_s > 0.0)) throw std::invalid_argument("trace interval must be positive");
    if (interval_s > duration_s) throw std::invalid_argument("trace interval exceeds duration");
    if (!(warmup_s >= 0.0)) throw std::invalid_argument("warm-up must be non-negative");
    if (flows.empty()) throw std::invalid_argument("scenario needs at least one flow");
    for (const auto& f : flows) f.validate();

    const auto finite = std::count_if(flows.begin(), flows.end(),
                                      [](const FlowConfig& f) { return f.volume_bytes.has_value(); });
    switch (scenario) {
    case Scenario::RandomDrop:
        if (flows.size() != 1) throw std::invalid_argument("random-drop uses exactly one flow");
        if (!(p_loss >= 0.0 && p_loss < 1.0)) throw std::invalid_argument("p_loss must lie in [0, 1)");
        if (finite != 0) throw std::invalid_argument("random-drop flow must be long-lived");
        break;
    case Scenario::SharedBottleneck:
        if (!link) throw std::invalid_argument("shared scenario needs a link");
        link->validate();
        if (finite != 0) throw std::invalid_argument("shared scenario flows must be long-lived");
        break;
    case Scenario::FiniteFlow:
        if (!link) throw std::invalid_argument("finite-flow scenario needs a link");
        link->validate();
        if (finite != 1) throw std::invalid_argument("finite-flow scenario needs exactly one finite flow");
        if (repetitions < 0) throw std::invalid_argument("repetitions must be non-negative");
        if (!(idle_gap_s >= 0.0)) throw std::invalid_argument("idle gap must be non-negative");
        break;
    }
    if (tx_jitter_s && !(*tx_jitter_s >= 0.0)) throw std::invalid_argument("transmit jitter must be non-negative");
}

std::size_t ScenarioConfig::interval_count() const
{
    return static_cast<std::size_t>(std::floor(duration_s / interval_s + 1e-9));
}

ScenarioConfig make_random_drop(Flavor flavor, double p_loss, double rtt_s, double duration_s,
                                std::uint64_t seed, LossReaction reaction)
{
    ScenarioConfig cfg;
    cfg.scenario = Scenario::RandomDrop;
    FlowConfig flow;
    flow.tcp.flavor = flavor;
    flow.tcp.rtt_s = rtt_s;
    flow.initial_cwnd = p_loss > 0.0 ? std::max(kMinCwnd, expected_cwnd(p_loss, flow.tcp)) : 10.0;
    cfg.flows.push_back(flow);
    cfg.p_loss = p_loss;
    cfg.duration_s = duration_s;
    cfg.seed = seed;
    cfg.loss_reaction = reaction;
    return cfg;
}

ScenarioConfig make_shared(int n, Flavor flavor, double capacity_bps, double rtt_s,
                           double duration_s, std::uint64_t seed)
{
    if (n < 1) throw std::invalid_argument("shared scenario needs at least one flow");
    ScenarioConfig cfg;
    cfg.scenario = Scenario::SharedBottleneck;
    cfg.link = LinkSpec::with_bdp_buffer(capacity_bps, rtt_s);
    FlowConfig flow;
    flow.tcp.flavor = flavor;
    flow.tcp.rtt_s = rtt_s;
    flow.initial_cwnd = std::max(kMinCwnd, capacity_bps * rtt_s / flow.tcp.mss_bits() / n);
    cfg.flows.assign(static_cast<std::size_t>(n), flow);
    cfg.duration_s = duration_s;
    cfg.seed = seed;
    cfg.loss_reaction = LossReaction::PerWindow;
    return cfg;
}

ScenarioConfig make_finite(int long_lived, Flavor flavor, double capacity_bps, double rtt_s,
                           double volume_bytes, int repetitions, std::uint64_t seed)
{
    if (long_lived < 0) throw std::invalid_argument("long-lived flow count must be non-negative");
    ScenarioConfig cfg;
    cfg.scenario = Scenario::FiniteFlow;
    cfg.link = LinkSpec::with_bdp_buffer(capacity_bps, rtt_s);
    FlowConfig flow;
    flow.tcp.flavor = flavor;
    flow.tcp.rtt_s = rtt_s;
    const int total = long_lived + 1;
    flow.initial_cwnd = std::max(kMinCwnd, capacity_bps * rtt_s / flow.tcp.mss_bits() / total);
    cfg.flows.assign(static_cast<std::size_t>(long_lived), flow);
    FlowConfig finite = flow;
    finite.initial_cwnd = 10.0;
    finite.volume_bytes = volume_bytes;
    cfg.flows.push_back(finite);
    cfg.repetitions = repetitions;
    cfg.loss_reaction = LossReaction::PerWindow;
    cfg.seed = seed;
    // generous cap; the run normally ends on the repetition count
    const double fair_s = volume_bytes * 8.0 / (capacity_bps / total);
    const int reps = std::max(repetitions, 1);
    cfg.duration_s = std::ceil(cfg.warmup_s + reps * (4.0 * fair_s + cfg.idle_gap_s + 10.0));
    return cfg;
}

namespace {

json tcp_to_json(const TcpParams& p)
{
    return json{{"mss_bytes", p.mss_bytes},
                {"rtt_s", p.rtt_s},
                {"ack_ratio", p.ack_ratio},
                {"flavor", std::string(to_string(p.flavor))}};
}

json flow_to_json(const FlowConfig& f)
{
    json j{{"tcp", tcp_to_json(f.tcp)}, {"initial_cwnd", f.initial_cwnd}};
    j["volume_bytes"] = f.volume_bytes ? json(*f.volume_bytes) : json(nullptr);
    return j;
}

json config_json(const ScenarioConfig& c)
{
    json flows = json::array();
    for (const auto& f : c.flows) flows.push_back(flow_to_json(f));
    json j{{"scenario", std::string(to_string(c.scenario))},
           {"flows", flows},
           {"p_loss", c.p_loss},
           {"duration_s", c.duration_s},
           {"seed", c.seed},
           {"loss_reaction", std::string(to_string(c.loss_reaction))},
           {"interval_s", c.interval_s},
           {"warmup_s", c.warmup_s},
           {"repetitions", c.repetitions},
           {"idle_gap_s", c.idle_gap_s}};
    j["tx_jitter_s"] = c.tx_jitter_s ? json(*c.tx_jitter_s) : json(nullptr);
    if (c.link) {
        j["link"] = json{{"capacity_bps", c.link->capacity_bps},
                         {"buffer_bytes", c.link->buffer_bytes},
                         {"base_rtt_s", c.link->base_rtt_s}};
    } else {
        j["link"] = nullptr;
    }
    return j;
}

} // namespace

std::string config_to_json(const ScenarioConfig& cfg)
{
    return config_json(cfg).dump();
}

ScenarioConfig config_from_json(std::string_view text)
{
    const json j = json::parse(text);
    ScenarioConfig c;
    c.scenario = parse_scenario(j.at("scenario").get<std::string>());
    for (const auto& fj : j.at("flows")) {
        FlowConfig f;
        const auto& t = fj.at("tcp");
        f.tcp.mss_bytes = t.at("mss_bytes").get<double>();
        f.tcp.rtt_s = t.at("rtt_s").get<double>();
        f.tcp.ack_ratio = t.at("ack_ratio").get<double>();
        f.tcp.flavor = parse_flavor(t.at("flavor").get<std::string>());
        f.initial_cwnd = fj.at("initial_cwnd").get<double>();
        if (!fj.at("volume_bytes").is_null()) f.volume_bytes = fj.at("volume_bytes").get<double>();
        c.flows.push_back(f);
    }
    if (!j.at("link").is_null()) {
        const auto& l = j.at("link");
        c.link = LinkSpec{l.at("capacity_bps").get<double>(), l.at("buffer_bytes").get<double>(),
                          l.at("base_rtt_s").get<double>()};
    }
    c.p_loss = j.at("p_loss").get<double>();
    c.duration_s = j.at("duration_s").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.loss_reaction = parse_loss_reaction(j.at("loss_reaction").get<std::string>());
    c.interval_s = j.at("interval_s").get<double>();
    c.warmup_s = j.at("warmup_s").get<double>();
    c.repetitions = j.at("repetitions").get<int>();
    c.idle_gap_s = j.at("idle_gap_s").get<double>();
    if (j.contains("tx_jitter_s") && !j.at("tx_jitter_s").is_null()) c.tx_jitter_s = j.at("tx_jitter_s").get<double>();
    return c;
}

} // namespace tcpshare
