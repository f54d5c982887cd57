#pragma once

// Per-node, per-domain gPTP state machines: two-step Sync/Follow_Up
// dissemination, bridge relay with correction-field accumulation, slave
// clock correction and peer-delay measurement.

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "gptpsim/clocks.hpp"
#include "gptpsim/messages.hpp"
#include "gptpsim/netmodel.hpp"
#include "gptpsim/trace.hpp"

namespace gptpsim {

enum class PortRole : std::uint8_t { master, slave, passive, disabled };

std::string_view to_string(PortRole role);
std::optional<PortRole> parse_port_role(std::string_view text);

struct DomainEngineConfig {
    Duration sync_interval = 125ms;
    Duration pdelay_interval = 1s;
    bool use_nrr = false;
    bool use_rate_ratio = false;
    Duration residence_time{0};      ///< extra bridge hold time before relaying
    Duration pdelay_turnaround{0};   ///< responder delay between Req ingress and Resp
    std::optional<Duration> link_delay_fallback;

    friend bool operator==(const DomainEngineConfig&, const DomainEngineConfig&) = default;
};

inline constexpr double kNrrLow = 0.999;
inline constexpr double kNrrHigh = 1.001;
inline constexpr Duration kNegativeDelayLimit = -1us;

/// precise_origin + correction + link_delay: the master's domain time at
/// the instant the Sync reached this node.
constexpr Duration compute_master_estimate(Duration precise_origin, Duration correction,
                                           Duration link_delay) {
    return precise_origin + correction + link_delay;
}

/// (nrr * (t4 - t1) - (t3 - t2)) / 2, floored at zero. Returns nullopt when
/// the raw result is below -1 us, in which case the sample must be discarded.
std::optional<Duration> compute_mean_link_delay(Duration t1, Duration t2, Duration t3,
                                                Duration t4, double nrr);

struct PdelayExchange {
    std::uint32_t seq = 0;
    Duration t1{0};
    std::optional<Duration> t2;
    std::optional<Duration> t4;
};

struct PdelayState {
    std::optional<PdelayExchange> outstanding;
    std::optional<Duration> mean_link_delay;
    double nrr = 1.0;
    bool nrr_clamped = false;
    std::deque<std::pair<Duration, Duration>> history;  ///< last two (t3, t4)
    std::uint32_t next_seq = 0;
    std::uint64_t completed = 0;
    std::uint64_t discarded = 0;
};

enum class NrrOutcome : std::uint8_t { updated, clamped, zero_interval, no_history };

/// Updates the neighbor rate ratio from a new (t3, t4) pair against the most
/// recent one in the history, then records the pair.
NrrOutcome update_nrr(PdelayState& state, Duration t3, Duration t4);

struct PendingSync {
    std::uint32_t seq = 0;
    PortIndex port = 0;
    Duration ingress_ts{0};
    SimTime ingress_time;
};

struct DomainCounters {
    std::uint64_t sync_ticks = 0;
    std::uint64_t applied = 0;
    std::uint64_t relayed = 0;
    std::uint64_t orphan_follow_up = 0;
    std::uint64_t stale_seq = 0;
    std::uint64_t no_link_delay = 0;
    std::uint64_t not_slave_port = 0;
    std::uint64_t superseded = 0;
};

struct DomainState {
    DomainId domain = 0;
    bool is_gm = false;
    DomainClock clock;
    std::vector<std::pair<PortIndex, PortRole>> roles;
    std::optional<PortIndex> slave_port;
    std::uint32_t next_seq = 0;
    std::optional<PendingSync> pending;
    std::optional<std::uint32_t> last_applied_seq;
    DomainCounters counters;

    PortRole role_of(PortIndex port) const;
    std::vector<PortIndex> master_ports() const;
};

struct NodeState {
    bool failed = false;
    std::optional<SimTime> failed_at;
    std::map<PortIndex, PdelayState> pdelay;
    std::vector<DomainState> domains;  ///< sorted by domain id

    DomainState* find_domain(DomainId id);
    const DomainState* find_domain(DomainId id) const;
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Drives the protocol for every node of a Network. Owns no network state;
/// it reacts to frame deliveries and its own timers.
class GptpEngine {
public:
    using TraceSink = std::function<void(TraceRecord)>;

    GptpEngine(Network& network, DomainEngineConfig config, TraceSink sink = {});

    /// Registers a domain: its grandmaster and the per-port roles. Ports not
    /// listed are disabled. Throws ProtocolError on role-table violations.
    void add_domain(DomainId domain, NodeIndex gm, const std::map<PortIndex, PortRole>& roles);

    /// Schedules the first pdelay exchange on every linked port at t = 0 and
    /// the first Sync of every domain one sync interval later.
    void start();

    void on_frame(const Frame& frame);

    /// Halts all protocol activity of the node from now on.
    void fail_node(NodeIndex node);

    void master_sync_tick(NodeIndex node, DomainId domain);
    void pdelay_initiator_tick(NodeIndex node, PortIndex port);

    const NodeState& node_state(NodeIndex node) const { return nodes_.at(node); }
    NodeState& node_state(NodeIndex node) { return nodes_.at(node); }
    const DomainEngineConfig& config() const { return config_; }
    std::vector<DomainId> domains() const;
    std::optional<NodeIndex> grandmaster(DomainId domain) const;

    /// Domain time of (node, domain) at t; the node must host that domain.
    Duration domain_time_of(NodeIndex node, DomainId domain, SimTime t);

private:
    void handle_sync(NodeIndex node, const Frame& frame, const SyncMsg& msg);
    void handle_follow_up(NodeIndex node, const Frame& frame, const FollowUpMsg& msg);
    void handle_pdelay_req(NodeIndex node, const Frame& frame, const PdelayReqMsg& msg);
    void handle_pdelay_resp(NodeIndex node, const Frame& frame, const PdelayRespMsg& msg);
    void handle_pdelay_resp_follow_up(NodeIndex node, const Frame& frame,
                                      const PdelayRespFollowUpMsg& msg);
    void relay(NodeIndex node, DomainId domain, PendingSync sync, FollowUpMsg upstream,
               Duration link_delay_gm, double rate_ratio);
    void reject(NodeIndex node, const Frame& frame, std::string_view reason);
    void emit(TraceRecord record);
    const std::string& node_id(NodeIndex node) const { return network_.node(node).spec.id; }

    Network& network_;
    DomainEngineConfig config_;
    TraceSink sink_;
    std::vector<NodeState> nodes_;
    std::map<DomainId, NodeIndex> gms_;
};

}  // namespace gptpsim
