#include "gptpsim/netmodel.hpp"

#include <algorithm>

namespace gptpsim {

std::string_view to_string(NodeKind kind) {
    return kind == NodeKind::bridge ? "bridge" : "end_station";
}

std::string port_id(std::string_view node, std::string_view port) {
    std::string id(node);
    id += '.';
    id += port;
    return id;
}

Duration serialization_time(std::uint32_t bytes, std::uint64_t bitrate) {
    const auto bits = static_cast<std::uint64_t>(bytes) * 8U;
    return Duration{static_cast<Duration::rep>((bits * 1'000'000'000ULL + bitrate - 1) / bitrate)};
}

Network::Network(Scheduler& scheduler, EventLog& log, FrameSizes sizes)
    : scheduler_(scheduler), log_(log), sizes_(sizes) {}

NodeIndex Network::add_node(const NodeSpec& spec, Oscillator oscillator) {
    if (node_ids_.contains(spec.id)) throw NetworkError("duplicate node id " + spec.id);
    if (spec.kind == NodeKind::end_station && spec.ports.size() != 1) {
        throw NetworkError("end station " + spec.id + " must have exactly one port");
    }
    if (spec.kind == NodeKind::bridge && spec.ports.size() < 2) {
        throw NetworkError("bridge " + spec.id + " needs at least two ports");
    }
    const NodeIndex index = nodes_.size();
    Node node{spec, {}};
    for (const auto& name : spec.ports) {
        auto id = port_id(spec.id, name);
        if (port_ids_.contains(id)) throw NetworkError("duplicate port id " + id);
        const PortIndex p = ports_.size();
        ports_.push_back(Port{index, name, id, std::nullopt, std::nullopt, SimTime{}, {}, 0, 0, 0});
        port_ids_.emplace(std::move(id), p);
        node.ports.push_back(p);
    }
    nodes_.push_back(std::move(node));
    oscillators_.push_back(std::move(oscillator));
    node_ids_.emplace(spec.id, index);
    return index;
}

LinkIndex Network::connect(const LinkSpec& spec) {
    if (link_ids_.contains(spec.id)) throw NetworkError("duplicate link id " + spec.id);
    if (spec.prop_delay < Duration::zero()) throw NetworkError("negative propagation delay");
    if (spec.bitrate == 0) throw NetworkError("bitrate must be positive");
    const auto a = find_port(spec.a);
    const auto b = find_port(spec.b);
    if (!a || !b) throw NetworkError("link " + spec.id + " references an unknown port");
    if (*a == *b) throw NetworkError("link " + spec.id + " connects a port to itself");
    if (ports_[*a].link || ports_[*b].link) {
        throw NetworkError("port already attached to a link in " + spec.id);
    }
    const LinkIndex index = links_.size();
    links_.push_back(Link{spec, *a, *b, true});
    ports_[*a].link = index;
    ports_[*a].peer = *b;
    ports_[*b].link = index;
    ports_[*b].peer = *a;
    link_ids_.emplace(spec.id, index);
    return index;
}

LogEntry Network::frame_entry(LogKind kind, SimTime t, PortIndex port,
                              const GptpMessage& msg) const {
    LogEntry e;
    e.time = t;
    e.kind = kind;
    e.node = nodes_[ports_[port].node].spec.id;
    e.port = ports_[port].id;
    e.msg = message_class(msg);
    e.domain = message_domain(msg);
    e.seq = message_seq(msg);
    return e;
}

TxResult Network::transmit(PortIndex port, const GptpMessage& payload) {
    return transmit(port, payload, sizes_.of(message_class(payload)));
}

TxResult Network::transmit(PortIndex port_index, const GptpMessage& payload, std::uint32_t size) {
    auto& port = ports_.at(port_index);
    const SimTime now = scheduler_.now();
    if (port.egress_filter.contains(message_class(payload))) {
        ++counters_.filtered;
        ++port.filtered;
        log_.append(frame_entry(LogKind::filter, now, port_index, payload));
        return TxResult{TxOutcome::filtered, now, oscillators_[port.node].local_time(now)};
    }
    if (!port.link) {
        ++counters_.dropped;
        ++port.dropped;
        auto e = frame_entry(LogKind::drop, now, port_index, payload);
        e.detail = "unattached";
        log_.append(std::move(e));
        return TxResult{TxOutcome::unattached, now, oscillators_[port.node].local_time(now)};
    }
    const auto& link = links_[*port.link];
    if (!link.up) {
        ++counters_.dropped;
        ++port.dropped;
        auto e = frame_entry(LogKind::drop, now, port_index, payload);
        e.detail = "link_down";
        log_.append(std::move(e));
        return TxResult{TxOutcome::link_down, now, oscillators_[port.node].local_time(now)};
    }
    size = std::max(size, kMinFrameBytes);
    const SimTime departure = std::max(now, port.busy_until);
    port.busy_until = departure + serialization_time(size, link.spec.bitrate);

    Frame frame;
    frame.src_port = port_index;
    frame.dst_port = *port.peer;
    frame.size = size;
    frame.payload = payload;
    frame.egress_time = departure;
    frame.egress_ts = oscillators_[port.node].local_time(departure);
    frame.ingress_time = departure + link.spec.prop_delay;

    ++counters_.sent;
    ++port.sent;
    log_.append(frame_entry(LogKind::tx, now, port_index, payload))
        .with("departure", ns(departure))
        .with("local", ns(frame.egress_ts))
        .with("size", size);

    const TxResult result{TxOutcome::sent, departure, frame.egress_ts};
    const SimTime arrival = frame.ingress_time;
    scheduler_.schedule(arrival, EventKind::frame_delivery, ports_[frame.dst_port].id,
                        [this, f = std::move(frame)]() mutable { deliver(std::move(f)); });
    return result;
}

void Network::deliver(Frame frame) {
    const auto& dst = ports_[frame.dst_port];
    frame.ingress_ts = oscillators_[dst.node].local_time(frame.ingress_time);
    ++counters_.delivered;
    log_.append(frame_entry(LogKind::rx, frame.ingress_time, frame.dst_port, frame.payload))
        .with("local", ns(frame.ingress_ts))
        .with("egress_time", ns(frame.egress_time));
    if (receiver_) receiver_(frame);
}

void Network::fail_link(LinkIndex link) { links_.at(link).up = false; }

void Network::set_egress_filter(PortIndex port, MessageClassSet filter) {
    ports_.at(port).egress_filter = filter;
}

std::optional<NodeIndex> Network::find_node(std::string_view id) const {
    if (auto it = node_ids_.find(id); it != node_ids_.end()) return it->second;
    return std::nullopt;
}

std::optional<PortIndex> Network::find_port(std::string_view id) const {
    if (auto it = port_ids_.find(id); it != port_ids_.end()) return it->second;
    return std::nullopt;
}

std::optional<LinkIndex> Network::find_link(std::string_view id) const {
    if (auto it = link_ids_.find(id); it != link_ids_.end()) return it->second;
    return std::nullopt;
}

}  // namespace gptpsim
