#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gptpsim/clocks.hpp"
#include "gptpsim/event_log.hpp"
#include "gptpsim/messages.hpp"
#include "gptpsim/sim_core.hpp"

namespace gptpsim {

using namespace std::chrono_literals;

enum class NodeKind : std::uint8_t { end_station, bridge };

std::string_view to_string(NodeKind kind);

/// Ports are named locally ("p0"); their network-wide id is "<node>.<port>".
struct NodeSpec {
    std::string id;
    NodeKind kind = NodeKind::end_station;
    std::vector<std::string> ports;
    friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

inline constexpr std::uint64_t kDefaultBitrate = 100'000'000;
inline constexpr Duration kDefaultPropDelay = 500ns;

struct LinkSpec {
    std::string id;
    std::string a;  ///< network-wide port id
    std::string b;
    Duration prop_delay = kDefaultPropDelay;
    std::uint64_t bitrate = kDefaultBitrate;
    friend bool operator==(const LinkSpec&, const LinkSpec&) = default;
};

std::string port_id(std::string_view node, std::string_view port);

using NodeIndex = std::size_t;
using PortIndex = std::size_t;
using LinkIndex = std::size_t;

struct Frame {
    PortIndex src_port = 0;
    PortIndex dst_port = 0;
    std::uint32_t size = kMinFrameBytes;
    GptpMessage payload;
    SimTime egress_time;
    SimTime ingress_time;
    Duration egress_ts{0};   ///< sender local time at start of frame
    Duration ingress_ts{0};  ///< receiver local time at start of frame arrival
};

enum class TxOutcome : std::uint8_t { sent, link_down, filtered, unattached };

struct TxResult {
    TxOutcome outcome = TxOutcome::sent;
    SimTime departure;
    Duration egress_ts{0};
    bool sent() const { return outcome == TxOutcome::sent; }
};

class NetworkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Serialization time of `bytes` at `bitrate`, rounded up to whole nanoseconds.
Duration serialization_time(std::uint32_t bytes, std::uint64_t bitrate);

/// Nodes, ports, full-duplex links and frame transport with ideal
/// start-of-frame timestamping. Each port transmits one frame at a time;
/// later frames queue behind the one on the line.
class Network {
public:
    struct Port {
        NodeIndex node = 0;
        std::string name;
        std::string id;
        std::optional<LinkIndex> link;
        std::optional<PortIndex> peer;
        SimTime busy_until;
        MessageClassSet egress_filter;
        std::uint64_t sent = 0;
        std::uint64_t dropped = 0;
        std::uint64_t filtered = 0;
    };
    struct Node {
        NodeSpec spec;
        std::vector<PortIndex> ports;
    };
    struct Link {
        LinkSpec spec;
        PortIndex a = 0;
        PortIndex b = 0;
        bool up = true;
    };
    struct Counters {
        std::uint64_t sent = 0;
        std::uint64_t delivered = 0;
        std::uint64_t dropped = 0;
        std::uint64_t filtered = 0;
    };

    using Receiver = std::function<void(const Frame&)>;

    Network(Scheduler& scheduler, EventLog& log, FrameSizes sizes = {});

    NodeIndex add_node(const NodeSpec& spec, Oscillator oscillator);
    LinkIndex connect(const LinkSpec& spec);
    void set_receiver(Receiver receiver) { receiver_ = std::move(receiver); }

    TxResult transmit(PortIndex port, const GptpMessage& payload);
    TxResult transmit(PortIndex port, const GptpMessage& payload, std::uint32_t size);

    void fail_link(LinkIndex link);
    void set_egress_filter(PortIndex port, MessageClassSet filter);

    std::optional<NodeIndex> find_node(std::string_view id) const;
    std::optional<PortIndex> find_port(std::string_view id) const;
    std::optional<LinkIndex> find_link(std::string_view id) const;

    const Node& node(NodeIndex i) const { return nodes_.at(i); }
    const Port& port(PortIndex i) const { return ports_.at(i); }
    const Link& link(LinkIndex i) const { return links_.at(i); }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t port_count() const { return ports_.size(); }
    std::size_t link_count() const { return links_.size(); }

    Oscillator& oscillator(NodeIndex i) { return oscillators_.at(i); }
    Duration local_time(NodeIndex i, SimTime t) { return oscillators_.at(i).local_time(t); }

    const Counters& counters() const { return counters_; }
    const FrameSizes& frame_sizes() const { return sizes_; }
    Scheduler& scheduler() { return scheduler_; }
    EventLog& log() { return log_; }

private:
    void deliver(Frame frame);
    LogEntry frame_entry(LogKind kind, SimTime t, PortIndex port, const GptpMessage& msg) const;

    Scheduler& scheduler_;
    EventLog& log_;
    FrameSizes sizes_;
    std::vector<Node> nodes_;
    std::vector<Port> ports_;
    std::vector<Link> links_;
    std::vector<Oscillator> oscillators_;
    std::map<std::string, NodeIndex, std::less<>> node_ids_;
    std::map<std::string, PortIndex, std::less<>> port_ids_;
    std::map<std::string, LinkIndex, std::less<>> link_ids_;
    Receiver receiver_;
    Counters counters_;
};

}  // namespace gptpsim
