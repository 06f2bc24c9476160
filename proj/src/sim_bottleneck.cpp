#include "tcpshare/sim.hpp"

#include "tcpshare/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>

namespace tcpshare {

namespace {

using Nanos = std::int64_t;

constexpr int kDupThresh = 3;
constexpr double kDelayedAckTimeout = 0.04;

Nanos to_ns(double s)
{
    return std::llround(s * 1e9);
}

double to_s(Nanos t)
{
    return static_cast<double>(t) * 1e-9;
}

enum class EventKind : std::uint8_t { QueueArrival, ServiceDone, AckArrival, DelayedAckTimer, FlowStart };

struct Packet {
    std::uint32_t flow = 0;
    std::uint32_t generation = 0;
    std::uint64_t tx = 0;  ///< per-flow transmission number, increasing in send order
    std::uint64_t seq = 0; ///< segment number within the current transfer
    Nanos sent = 0;
    Nanos delivered = 0; ///< left the bottleneck
};

struct Event {
    Nanos t;
    std::uint64_t order;
    EventKind kind;
    Packet pkt;
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const
    {
        return a.t != b.t ? a.t > b.t : a.order > b.order;
    }
};

struct Outstanding {
    std::uint64_t tx;
    std::uint64_t seq;
};

/// A transmission known to be missing (a later one was delivered) that has
/// not yet collected kDupThresh later deliveries.
struct Suspect {
    std::uint64_t tx;
    std::uint64_t seq;
    int later;
};

/// One cumulative ACK: the deliveries it reports, in arrival order.
struct AckBatch {
    Nanos generated = 0;
    std::vector<Packet> packets;
};

struct Sender {
    FlowConfig cfg;
    int ack_ratio = 2;
    bool finite = false;
    bool active = false;
    std::uint32_t generation = 0;
    FlowState cc;

    std::deque<Outstanding> outstanding; ///< sent, not reported, in tx order
    std::vector<Suspect> suspects;
    std::deque<std::uint64_t> retransmit;

    std::uint64_t next_tx = 0;
    std::uint64_t recovery_tx = 0; ///< reductions only for tx >= this (PerWindow)
    std::uint64_t total_segments = 0;
    std::uint64_t delivered_segments = 0;
    std::uint64_t in_network = 0; ///< packets on the wire, in the queue, or on the ACK path
    Nanos started = 0;
    Nanos last_departure = 0;
    Rng rng{0, 0};

    // receiver side
    std::vector<Packet> unacked_rx;
    std::uint64_t rx_expected_tx = 0;
    std::uint64_t delack_timer = 0;
    std::deque<AckBatch> ack_path;

    std::size_t in_flight() const { return outstanding.size() + suspects.size(); }
};

class BottleneckSim {
public:
    BottleneckSim(const ScenarioConfig& cfg, SimDiagnostics* diag);

    void run();

    RateTrace take_trace() { return std::move(trace_); }
    std::vector<double> take_completions() { return std::move(completions_); }
    std::vector<double> take_starts() { return std::move(starts_); }

private:
    void schedule(Nanos t, EventKind kind, const Packet& pkt);

    void start_flow(std::uint32_t id, Nanos now);
    void send_available(Sender& s, Nanos now);
    void transmit(Sender& s, std::uint32_t id, std::uint64_t seq, Nanos now);
    void declare_lost(Sender& s, std::uint64_t tx, std::uint64_t seq, Nanos now);
    void check_stall(Sender& s, Nanos now);

    void on_queue_arrival(const Packet& pkt, Nanos now);
    void on_service_done(Nanos now);
    void receive(const Packet& pkt, Nanos now);
    void send_ack(Sender& s, Nanos now);
    void on_delack_timer(const Packet& pkt, Nanos now);
    void on_ack_arrival(const Packet& pkt, Nanos now);
    void on_delivery_report(Sender& s, const Packet& pkt, Nanos now);

    void finish(Nanos end);

    const ScenarioConfig& cfg_;
    SimDiagnostics* diag_;
    LinkSpec link_;
    bool per_window_;

    Nanos one_way_;
    Nanos jitter_ns_;
    Nanos interval_ns_;
    Nanos end_ns_;
    double packet_bytes_;
    Nanos service_ns_;

    std::priority_queue<Event, std::vector<Event>, EventLater> events_;
    std::uint64_t order_ = 0;

    std::deque<Packet> fifo_;
    double occupancy_ = 0.0;
    bool busy_ = false;

    std::vector<Sender> senders_;
    std::int64_t finite_id_ = -1;
    int reps_done_ = 0;
    std::vector<double> completions_;
    std::vector<double> starts_;

    RateTrace trace_;
};

BottleneckSim::BottleneckSim(const ScenarioConfig& cfg, SimDiagnostics* diag)
    : cfg_(cfg)
    , diag_(diag)
    , link_(*cfg.link)
    , per_window_(cfg.loss_reaction == LossReaction::PerWindow)
{
    one_way_ = to_ns(link_.base_rtt_s / 2.0);
    interval_ns_ = to_ns(cfg.interval_s);
    end_ns_ = interval_ns_ * static_cast<Nanos>(cfg.interval_count());

    // one packet size on the link; flows share the MSS of flow 0
    packet_bytes_ = cfg.flows.front().tcp.mss_bytes;
    for (const auto& f : cfg.flows) {
        if (f.tcp.mss_bytes != packet_bytes_) {
            throw std::invalid_argument("all flows on a bottleneck must use the same MSS");
        }
    }
    if (packet_bytes_ > link_.buffer_bytes) {
        throw std::invalid_argument("bottleneck buffer is smaller than one packet");
    }
    service_ns_ = std::max<Nanos>(1, to_ns(packet_bytes_ * 8.0 / link_.capacity_bps));
    jitter_ns_ = cfg.tx_jitter_s ? to_ns(*cfg.tx_jitter_s) : service_ns_;

    trace_.interval_s = cfg.interval_s;
    trace_.config = cfg;
    trace_.bytes.assign(cfg.flows.size(), std::vector<std::uint64_t>(cfg.interval_count(), 0));
    trace_.counters.assign(cfg.flows.size(), FlowCounters{});

    senders_.resize(cfg.flows.size());
    for (std::size_t i = 0; i < cfg.flows.size(); ++i) {
        Sender& s = senders_[i];
        s.cfg = cfg.flows[i];
        s.ack_ratio = ack_events_ratio(s.cfg.tcp);
        s.finite = s.cfg.volume_bytes.has_value();
        if (s.finite) {
            finite_id_ = static_cast<std::int64_t>(i);
            s.total_segments =
                static_cast<std::uint64_t>(std::ceil(*s.cfg.volume_bytes / s.cfg.tcp.mss_bytes));
        } else {
            s.total_segments = std::numeric_limits<std::uint64_t>::max();
        }
    }

    // Long-lived flows start at a random phase within one base RTT, drawn
    // from their own stream; the finite flow starts after warm-up.
    const Nanos base_rtt = to_ns(link_.base_rtt_s);
    for (std::size_t i = 0; i < senders_.size(); ++i) {
        Packet p;
        p.flow = static_cast<std::uint32_t>(i);
        if (senders_[i].finite) {
            schedule(to_ns(cfg.warmup_s), EventKind::FlowStart, p);
            senders_[i].rng = Rng(cfg.seed, i);
        } else {
            Rng& rng = senders_[i].rng;
            rng = Rng(cfg.seed, i);
            const auto offset = static_cast<Nanos>(rng.uniform() * static_cast<double>(base_rtt));
            schedule(offset, EventKind::FlowStart, p);
        }
    }
}

void BottleneckSim::schedule(Nanos t, EventKind kind, const Packet& pkt)
{
    events_.push(Event{t, order_++, kind, pkt});
}

void BottleneckSim::run()
{
    Nanos last = 0;
    Nanos stop = end_ns_;
    while (!events_.empty()) {
        const Event ev = events_.top();
        if (ev.t >= stop) break;
        events_.pop();
        if (diag_) {
            ++diag_->events;
            if (ev.t < last) diag_->time_monotone = false;
        }
        last = ev.t;

        switch (ev.kind) {
        case EventKind::QueueArrival: on_queue_arrival(ev.pkt, ev.t); break;
        case EventKind::ServiceDone: on_service_done(ev.t); break;
        case EventKind::AckArrival: on_ack_arrival(ev.pkt, ev.t); break;
        case EventKind::DelayedAckTimer: on_delack_timer(ev.pkt, ev.t); break;
        case EventKind::FlowStart: start_flow(ev.pkt.flow, ev.t); break;
        }

        if (cfg_.repetitions > 0 && reps_done_ >= cfg_.repetitions && stop == end_ns_) {
            // finish the current trace interval so every interval is complete
            stop = std::min(end_ns_, (ev.t / interval_ns_ + 1) * interval_ns_);
        }
    }
    finish(stop);
}

void BottleneckSim::start_flow(std::uint32_t id, Nanos now)
{
    Sender& s = senders_[id];
    ++s.generation;
    s.active = true;
    s.cc = initial_state(s.cfg, to_s(now), s.finite);
    s.outstanding.clear();
    s.suspects.clear();
    s.retransmit.clear();
    s.cc.next_seq = 0;
    s.delivered_segments = 0;
    s.recovery_tx = s.next_tx;
    s.started = now;
    if (s.finite) starts_.push_back(to_s(now));
    send_available(s, now);
}

void BottleneckSim::send_available(Sender& s, Nanos now)
{
    const auto id = static_cast<std::uint32_t>(&s - senders_.data());
    // fast retransmissions go out immediately
    while (!s.retransmit.empty()) {
        const std::uint64_t seq = s.retransmit.front();
        s.retransmit.pop_front();
        ++trace_.counters[id].retransmits;
        transmit(s, id, seq, now);
    }
    const auto window = static_cast<std::size_t>(std::floor(s.cc.cwnd));
    while (s.in_flight() < window && s.cc.next_seq < s.total_segments) {
        transmit(s, id, s.cc.next_seq++, now);
    }
}

void BottleneckSim::transmit(Sender& s, std::uint32_t id, std::uint64_t seq, Nanos now)
{
    // Host transmit jitter delays the wire departure without reordering the
    // flow's own packets.
    Nanos departure = now;
    if (jitter_ns_ > 0) {
        departure += static_cast<Nanos>(s.rng.uniform() * static_cast<double>(jitter_ns_));
        departure = std::max(departure, s.last_departure);
        s.last_departure = departure;
    }
    Packet p{id, s.generation, s.next_tx++, seq, departure};
    s.outstanding.push_back({p.tx, seq});
    ++s.in_network;
    ++trace_.counters[id].sent;
    schedule(departure + one_way_, EventKind::QueueArrival, p);
}

void BottleneckSim::declare_lost(Sender& s, std::uint64_t tx, std::uint64_t seq, Nanos now)
{
    if (!per_window_ || tx >= s.recovery_tx) {
        on_loss(s.cc, s.cfg, to_s(now));
        s.recovery_tx = s.next_tx;
        ++trace_.counters[static_cast<std::size_t>(&s - senders_.data())].window_reductions;
    }
    s.retransmit.push_back(seq);
}

void BottleneckSim::check_stall(Sender& s, Nanos now)
{
    // Nothing of this flow is left in the network, yet data is unacknowledged:
    // no further ACK can arrive. Stand-in for a retransmission timeout.
    if (!s.active || s.in_network != 0 || s.in_flight() == 0) return;

    const auto id = static_cast<std::size_t>(&s - senders_.data());
    ++trace_.counters[id].stalls;
    std::vector<Outstanding> lost;
    for (const auto& su : s.suspects) lost.push_back({su.tx, su.seq});
    for (const auto& o : s.outstanding) lost.push_back(o);
    std::sort(lost.begin(), lost.end(), [](const Outstanding& a, const Outstanding& b) { return a.tx < b.tx; });
    s.suspects.clear();
    s.outstanding.clear();

    on_loss(s.cc, s.cfg, to_s(now));
    s.recovery_tx = s.next_tx;
    ++trace_.counters[id].window_reductions;
    for (const auto& o : lost) s.retransmit.push_back(o.seq);
    send_available(s, now);
}

void BottleneckSim::on_queue_arrival(const Packet& pkt, Nanos now)
{
    if (occupancy_ + packet_bytes_ > link_.buffer_bytes) {
        Sender& s = senders_[pkt.flow];
        if (diag_ && link_.buffer_bytes - occupancy_ >= packet_bytes_) ++diag_->drops_with_space;
        ++trace_.counters[pkt.flow].dropped;
        --s.in_network;
        if (pkt.generation == s.generation) check_stall(s, now);
        return;
    }
    fifo_.push_back(pkt);
    occupancy_ += packet_bytes_;
    if (diag_) diag_->max_queue_bytes = std::max(diag_->max_queue_bytes, occupancy_);
    if (!busy_) {
        busy_ = true;
        schedule(now + service_ns_, EventKind::ServiceDone, Packet{});
    }
}

void BottleneckSim::on_service_done(Nanos now)
{
    const Packet pkt = fifo_.front();
    fifo_.pop_front();
    occupancy_ -= packet_bytes_;

    const auto bytes = static_cast<std::uint64_t>(std::llround(packet_bytes_));
    FlowCounters& c = trace_.counters[pkt.flow];
    ++c.delivered;
    c.delivered_bytes += bytes;
    trace_.bytes[pkt.flow][static_cast<std::size_t>(now / interval_ns_)] += bytes;

    receive(pkt, now);
    if (fifo_.empty()) {
        busy_ = false;
    } else {
        schedule(now + service_ns_, EventKind::ServiceDone, Packet{});
    }
}

void BottleneckSim::receive(const Packet& pkt, Nanos now)
{
    // The receiver sits right behind the bottleneck. It acknowledges every
    // a-th segment, and at once when a segment arrives after a gap.
    Sender& s = senders_[pkt.flow];
    const bool gap = pkt.tx != s.rx_expected_tx;
    s.rx_expected_tx = pkt.tx + 1;
    s.unacked_rx.push_back(pkt);
    s.unacked_rx.back().delivered = now;
    if (gap || s.unacked_rx.size() >= static_cast<std::size_t>(s.ack_ratio)) {
        send_ack(s, now);
    } else if (s.unacked_rx.size() == 1) {
        schedule(now + to_ns(kDelayedAckTimeout), EventKind::DelayedAckTimer,
                 Packet{pkt.flow, 0, s.delack_timer, 0, now, now});
    }
}

void BottleneckSim::send_ack(Sender& s, Nanos now)
{
    ++s.delack_timer;
    s.ack_path.push_back(AckBatch{now, std::move(s.unacked_rx)});
    s.unacked_rx.clear();
    Packet p;
    p.flow = static_cast<std::uint32_t>(&s - senders_.data());
    schedule(now + one_way_, EventKind::AckArrival, p);
}

void BottleneckSim::on_delack_timer(const Packet& pkt, Nanos now)
{
    Sender& s = senders_[pkt.flow];
    if (pkt.tx == s.delack_timer && !s.unacked_rx.empty()) send_ack(s, now);
}

void BottleneckSim::on_ack_arrival(const Packet& pkt, Nanos now)
{
    Sender& s = senders_[pkt.flow];
    const AckBatch batch = std::move(s.ack_path.front());
    s.ack_path.pop_front();
    for (const Packet& p : batch.packets) {
        --s.in_network;
        if (diag_) {
            // path round trip; the receiver's ACK hold time is not part of it
            const Nanos rtt = p.delivered + one_way_ - p.sent;
            diag_->min_rtt_s = std::min(diag_->min_rtt_s, to_s(rtt));
            diag_->max_rtt_s = std::max(diag_->max_rtt_s, to_s(rtt));
            if (now - p.sent <= 2 * one_way_) ++diag_->causality_violations;
        }
        if (s.active && p.generation == s.generation) on_delivery_report(s, p, now);
    }
    if (!s.active) return;
    send_available(s, now);
    check_stall(s, now);
}

void BottleneckSim::on_delivery_report(Sender& s, const Packet& pkt, Nanos now)
{
    // The FIFO keeps each flow in order, so every earlier transmission still
    // outstanding was dropped.
    while (!s.outstanding.empty() && s.outstanding.front().tx < pkt.tx) {
        s.suspects.push_back({s.outstanding.front().tx, s.outstanding.front().seq, 0});
        s.outstanding.pop_front();
    }
    if (s.outstanding.empty() || s.outstanding.front().tx != pkt.tx) {
        throw std::logic_error("ACK for a transmission that is not outstanding");
    }
    s.outstanding.pop_front();

    const double now_s = to_s(now);
    std::vector<Suspect> confirmed;
    for (auto it = s.suspects.begin(); it != s.suspects.end();) {
        if (++it->later >= kDupThresh) {
            confirmed.push_back(*it);
            it = s.suspects.erase(it);
        } else {
            ++it;
        }
    }
    for (const auto& su : confirmed) declare_lost(s, su.tx, su.seq, now);

    ++s.delivered_segments;
    s.cc.bytes_delivered += static_cast<std::uint64_t>(std::llround(s.cfg.tcp.mss_bytes));
    s.cc.highest_acked = std::max(s.cc.highest_acked, pkt.seq);
    if (s.cfg.flavor() == Flavor::Reno) {
        reno_on_ack(s.cc, 1, s.ack_ratio);
    } else {
        cubic_on_ack(s.cc, 1, s.ack_ratio, now_s);
    }

    if (s.finite && s.delivered_segments >= s.total_segments) {
        s.active = false;
        completions_.push_back(to_s(now - s.started));
        ++reps_done_;
        if (cfg_.repetitions == 0 || reps_done_ < cfg_.repetitions) {
            schedule(now + to_ns(cfg_.idle_gap_s), EventKind::FlowStart, Packet{static_cast<std::uint32_t>(&s - senders_.data())});
        }
    }
}

void BottleneckSim::finish(Nanos end)
{
    const auto n_intervals = static_cast<std::size_t>(end / interval_ns_);
    for (auto& b : trace_.bytes) b.resize(n_intervals);

    // packets still on the forward path (propagating or queued)
    for (const auto& p : fifo_) ++trace_.counters[p.flow].in_flight_at_end;
    while (!events_.empty()) {
        const Event& ev = events_.top();
        if (ev.kind == EventKind::QueueArrival) ++trace_.counters[ev.pkt.flow].in_flight_at_end;
        events_.pop();
    }
    // deliveries are counted at the link; bytes past the last whole interval
    // are not part of the trace
    for (std::size_t f = 0; f < trace_.bytes.size(); ++f) {
        std::uint64_t sum = 0;
        for (auto b : trace_.bytes[f]) sum += b;
        trace_.counters[f].delivered_bytes = sum;
    }
}

} // namespace

RateTrace run_shared_bottleneck(const ScenarioConfig& cfg, SimDiagnostics* diag)
{
    cfg.validate();
    if (cfg.scenario != Scenario::SharedBottleneck) {
        throw std::invalid_argument("run_shared_bottleneck needs a shared scenario");
    }
    BottleneckSim sim(cfg, diag);
    sim.run();
    return sim.take_trace();
}

FiniteFlowResult run_finite_flow(const ScenarioConfig& cfg, SimDiagnostics* diag)
{
    cfg.validate();
    if (cfg.scenario != Scenario::FiniteFlow) {
        throw std::invalid_argument("run_finite_flow needs a finite-flow scenario");
    }
    BottleneckSim sim(cfg, diag);
    sim.run();
    FiniteFlowResult result;
    result.completion_s = sim.take_completions();
    result.start_s = sim.take_starts();
    result.start_s.resize(result.completion_s.size());
    result.trace = sim.take_trace();
    return result;
}

} // namespace tcpshare
