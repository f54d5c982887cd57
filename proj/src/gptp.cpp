#include "gptpsim/gptp.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace gptpsim {

namespace {

constexpr std::array<std::string_view, 4> kRoleNames = {"master", "slave", "passive", "disabled"};

Duration scale(Duration d, double ratio) {
    if (ratio == 1.0) return d;
    return Duration{std::llround(static_cast<double>(d.count()) * ratio)};
}

}  // namespace

std::string_view to_string(PortRole role) { return kRoleNames.at(static_cast<std::size_t>(role)); }

std::optional<PortRole> parse_port_role(std::string_view text) {
    for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
        if (kRoleNames[i] == text) return static_cast<PortRole>(i);
    }
    return std::nullopt;
}

std::optional<Duration> compute_mean_link_delay(Duration t1, Duration t2, Duration t3,
                                                Duration t4, double nrr) {
    const double round_trip = nrr * static_cast<double>((t4 - t1).count());
    const double turnaround = static_cast<double>((t3 - t2).count());
    const auto delay = Duration{std::llround((round_trip - turnaround) / 2.0)};
    if (delay < kNegativeDelayLimit) return std::nullopt;
    return std::max(delay, Duration::zero());
}

NrrOutcome update_nrr(PdelayState& state, Duration t3, Duration t4) {
    NrrOutcome outcome = NrrOutcome::no_history;
    if (!state.history.empty()) {
        const auto [prev_t3, prev_t4] = state.history.back();
        const auto d4 = t4 - prev_t4;
        if (d4 == Duration::zero()) {
            outcome = NrrOutcome::zero_interval;
        } else {
            const double raw = static_cast<double>((t3 - prev_t3).count()) /
                               static_cast<double>(d4.count());
            state.nrr = std::clamp(raw, kNrrLow, kNrrHigh);
            state.nrr_clamped = state.nrr != raw;
            outcome = state.nrr_clamped ? NrrOutcome::clamped : NrrOutcome::updated;
        }
    }
    state.history.emplace_back(t3, t4);
    while (state.history.size() > 2) state.history.pop_front();
    return outcome;
}

PortRole DomainState::role_of(PortIndex port) const {
    for (const auto& [p, r] : roles) {
        if (p == port) return r;
    }
    return PortRole::disabled;
}

std::vector<PortIndex> DomainState::master_ports() const {
    std::vector<PortIndex> out;
    for (const auto& [p, r] : roles) {
        if (r == PortRole::master) out.push_back(p);
    }
    return out;
}

DomainState* NodeState::find_domain(DomainId id) {
    auto it = std::find_if(domains.begin(), domains.end(),
                           [id](const DomainState& d) { return d.domain == id; });
    return it == domains.end() ? nullptr : &*it;
}

const DomainState* NodeState::find_domain(DomainId id) const {
    return const_cast<NodeState*>(this)->find_domain(id);
}

GptpEngine::GptpEngine(Network& network, DomainEngineConfig config, TraceSink sink)
    : network_(network), config_(config), sink_(std::move(sink)), nodes_(network.node_count()) {
    if (config_.sync_interval <= Duration::zero() || config_.pdelay_interval <= Duration::zero()) {
        throw ProtocolError("sync and pdelay intervals must be positive");
    }
    for (PortIndex p = 0; p < network_.port_count(); ++p) {
        if (network_.port(p).link) nodes_[network_.port(p).node].pdelay.emplace(p, PdelayState{});
    }
}

void GptpEngine::add_domain(DomainId domain, NodeIndex gm,
                            const std::map<PortIndex, PortRole>& roles) {
    if (gms_.contains(domain)) throw ProtocolError("domain registered twice");
    if (gm >= nodes_.size()) throw ProtocolError("grandmaster index out of range");
    std::map<NodeIndex, DomainState> per_node;
    auto state_for = [&](NodeIndex n) -> DomainState& {
        auto [it, inserted] = per_node.try_emplace(n);
        if (inserted) {
            it->second.domain = domain;
            it->second.is_gm = n == gm;
            it->second.clock = DomainClock{node_id(n), domain, {}, std::nullopt};
        }
        return it->second;
    };
    state_for(gm);
    for (const auto& [port, role] : roles) {
        const NodeIndex n = network_.port(port).node;
        auto& state = state_for(n);
        state.roles.emplace_back(port, role);
        if (role == PortRole::slave) {
            if (n == gm) {
                throw ProtocolError("grandmaster " + node_id(n) + " has a slave port in domain " +
                                    std::to_string(domain));
            }
            if (state.slave_port) {
                throw ProtocolError("node " + node_id(n) + " has two slave ports in domain " +
                                    std::to_string(domain) + ": " +
                                    network_.port(*state.slave_port).id + ", " +
                                    network_.port(port).id);
            }
            state.slave_port = port;
        }
    }
    for (auto& [n, state] : per_node) {
        std::sort(state.roles.begin(), state.roles.end());
        auto& list = nodes_[n].domains;
        auto pos = std::lower_bound(list.begin(), list.end(), domain,
                                    [](const DomainState& d, DomainId id) { return d.domain < id; });
        list.insert(pos, std::move(state));
    }
    gms_.emplace(domain, gm);
}

std::vector<DomainId> GptpEngine::domains() const {
    std::vector<DomainId> out;
    for (const auto& [d, gm] : gms_) out.push_back(d);
    return out;
}

std::optional<NodeIndex> GptpEngine::grandmaster(DomainId domain) const {
    if (auto it = gms_.find(domain); it != gms_.end()) return it->second;
    return std::nullopt;
}

Duration GptpEngine::domain_time_of(NodeIndex node, DomainId domain, SimTime t) {
    const auto* state = nodes_.at(node).find_domain(domain);
    if (state == nullptr) throw ProtocolError("node does not host domain");
    return domain_time(state->clock, network_.oscillator(node), t);
}

void GptpEngine::start() {
    auto& sched = network_.scheduler();
    for (NodeIndex n = 0; n < nodes_.size(); ++n) {
        for (const auto& [port, state] : nodes_[n].pdelay) {
            sched.schedule(sched.now(), EventKind::timer, network_.port(port).id,
                           [this, n, p = port] { pdelay_initiator_tick(n, p); });
        }
    }
    for (const auto& [domain, gm] : gms_) {
        sched.schedule_in(config_.sync_interval, EventKind::timer, node_id(gm),
                          [this, n = gm, d = domain] { master_sync_tick(n, d); });
    }
}

void GptpEngine::fail_node(NodeIndex node) {
    auto& state = nodes_.at(node);
    if (state.failed) return;
    state.failed = true;
    state.failed_at = network_.scheduler().now();
}

void GptpEngine::master_sync_tick(NodeIndex node, DomainId domain) {
    auto& ns = nodes_.at(node);
    if (ns.failed) return;
    auto* state = ns.find_domain(domain);
    if (state == nullptr || !state->is_gm) return;
    const std::uint32_t seq = state->next_seq++;
    ++state->counters.sync_ticks;
    for (PortIndex port : state->master_ports()) {
        const auto tx = network_.transmit(port, SyncMsg{domain, seq});
        const Duration origin = state->clock.offset_map.apply(tx.egress_ts);
        network_.transmit(port, FollowUpMsg{domain, seq, origin, Duration::zero(), 1.0});
    }
    network_.scheduler().schedule_in(config_.sync_interval, EventKind::timer, node_id(node),
                                     [this, node, domain] { master_sync_tick(node, domain); });
}

void GptpEngine::pdelay_initiator_tick(NodeIndex node, PortIndex port) {
    auto& ns = nodes_.at(node);
    if (ns.failed) return;
    auto& pd = ns.pdelay.at(port);
    const std::uint32_t seq = pd.next_seq++;
    const auto tx = network_.transmit(port, PdelayReqMsg{seq});
    pd.outstanding = PdelayExchange{seq, tx.egress_ts, std::nullopt, std::nullopt};
    network_.scheduler().schedule_in(config_.pdelay_interval, EventKind::timer,
                                     network_.port(port).id,
                                     [this, node, port] { pdelay_initiator_tick(node, port); });
}

void GptpEngine::on_frame(const Frame& frame) {
    const NodeIndex node = network_.port(frame.dst_port).node;
    if (nodes_[node].failed) return;
    std::visit(
        [&](const auto& msg) {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, SyncMsg>) {
                handle_sync(node, frame, msg);
            } else if constexpr (std::is_same_v<T, FollowUpMsg>) {
                handle_follow_up(node, frame, msg);
            } else if constexpr (std::is_same_v<T, PdelayReqMsg>) {
                handle_pdelay_req(node, frame, msg);
            } else if constexpr (std::is_same_v<T, PdelayRespMsg>) {
                handle_pdelay_resp(node, frame, msg);
            } else {
                handle_pdelay_resp_follow_up(node, frame, msg);
            }
        },
        frame.payload);
}

void GptpEngine::reject(NodeIndex node, const Frame& frame, std::string_view reason) {
    LogEntry e;
    e.time = network_.scheduler().now();
    e.kind = LogKind::sync_rejected;
    e.node = node_id(node);
    e.port = network_.port(frame.dst_port).id;
    e.msg = message_class(frame.payload);
    e.domain = message_domain(frame.payload);
    e.seq = message_seq(frame.payload);
    e.detail = std::string(reason);
    network_.log().append(std::move(e));
}

void GptpEngine::emit(TraceRecord record) {
    if (sink_) sink_(std::move(record));
}

void GptpEngine::handle_sync(NodeIndex node, const Frame& frame, const SyncMsg& msg) {
    auto* state = nodes_[node].find_domain(msg.domain);
    if (state == nullptr || state->role_of(frame.dst_port) != PortRole::slave) {
        if (state != nullptr) ++state->counters.not_slave_port;
        reject(node, frame, "not_slave_port");
        return;
    }
    if (state->pending) ++state->counters.superseded;
    state->pending = PendingSync{msg.seq, frame.dst_port, frame.ingress_ts, frame.ingress_time};
}

void GptpEngine::handle_follow_up(NodeIndex node, const Frame& frame, const FollowUpMsg& msg) {
    auto* state = nodes_[node].find_domain(msg.domain);
    if (state == nullptr || state->role_of(frame.dst_port) != PortRole::slave) {
        if (state != nullptr) ++state->counters.not_slave_port;
        reject(node, frame, "not_slave_port");
        return;
    }
    if (!state->pending || state->pending->seq != msg.seq || state->pending->port != frame.dst_port) {
        ++state->counters.orphan_follow_up;
        reject(node, frame, "orphan_follow_up");
        return;
    }
    const PendingSync sync = *state->pending;
    state->pending.reset();
    if (state->last_applied_seq && msg.seq <= *state->last_applied_seq) {
        ++state->counters.stale_seq;
        reject(node, frame, "stale_seq");
        return;
    }
    const auto& pd = nodes_[node].pdelay.at(frame.dst_port);
    const auto link_delay = pd.mean_link_delay ? pd.mean_link_delay : config_.link_delay_fallback;
    if (!link_delay) {
        ++state->counters.no_link_delay;
        reject(node, frame, "no_link_delay");
        return;
    }

    const double rate_ratio = config_.use_rate_ratio ? msg.rate_ratio * pd.nrr : 1.0;
    const Duration link_delay_gm =
        config_.use_rate_ratio ? scale(*link_delay, msg.rate_ratio) : *link_delay;
    const Duration estimate = compute_master_estimate(msg.precise_origin, msg.correction, link_delay_gm);

    const SimTime now = network_.scheduler().now();
    auto& osc = network_.oscillator(node);
    const auto corr = apply_sync_correction(state->clock, osc, now, estimate, sync.ingress_ts, rate_ratio);
    state->clock.last_sync = SyncStamp{now, msg.seq};
    state->last_applied_seq = msg.seq;
    ++state->counters.applied;

    network_.log()
        .append(LogEntry{now, LogKind::sync_applied, node_id(node), network_.port(frame.dst_port).id,
                         std::nullopt, msg.domain, msg.seq, {}, {}})
        .with("origin", ns(msg.precise_origin))
        .with("correction", ns(msg.correction))
        .with("link_delay", ns(link_delay_gm))
        .with("estimate", ns(estimate))
        .with("at_local", ns(sync.ingress_ts))
        .with("pre_diff", ns(corr.before.diff))
        .with("post_diff", ns(corr.after.diff));

    const auto now_ns = ns(now);
    emit(TraceRecord{now_ns, node_id(node), msg.domain, now_ns + ns(corr.before.diff),
                     ns(corr.before.diff), TraceCause::pre_sync});
    emit(TraceRecord{now_ns, node_id(node), msg.domain, now_ns + ns(corr.after.diff),
                     ns(corr.after.diff), TraceCause::post_sync});

    if (state->master_ports().empty()) return;
    if (config_.residence_time == Duration::zero()) {
        relay(node, msg.domain, sync, msg, link_delay_gm, rate_ratio);
    } else {
        network_.scheduler().schedule_in(
            config_.residence_time, EventKind::timer, node_id(node),
            [this, node, d = msg.domain, sync, msg, link_delay_gm, rate_ratio] {
                relay(node, d, sync, msg, link_delay_gm, rate_ratio);
            });
    }
}

void GptpEngine::relay(NodeIndex node, DomainId domain, PendingSync sync, FollowUpMsg upstream,
                       Duration link_delay_gm, double rate_ratio) {
    if (nodes_[node].failed) return;
    auto* state = nodes_[node].find_domain(domain);
    for (PortIndex port : state->master_ports()) {
        const auto tx = network_.transmit(port, SyncMsg{domain, upstream.seq});
        const Duration residence_local = tx.egress_ts - sync.ingress_ts;
        const Duration residence = config_.use_rate_ratio ? scale(residence_local, rate_ratio)
                                                          : residence_local;
        FollowUpMsg out = upstream;
        out.correction = upstream.correction + link_delay_gm + residence;
        out.rate_ratio = config_.use_rate_ratio ? rate_ratio : 1.0;
        network_.transmit(port, out);
        ++state->counters.relayed;
        network_.log()
            .append(LogEntry{network_.scheduler().now(), LogKind::relay, node_id(node),
                             network_.port(port).id, std::nullopt, domain, upstream.seq, {}, {}})
            .with("link_delay", ns(link_delay_gm))
            .with("residence", ns(residence))
            .with("correction_in", ns(upstream.correction))
            .with("correction_out", ns(out.correction));
    }
}

void GptpEngine::handle_pdelay_req(NodeIndex node, const Frame& frame, const PdelayReqMsg& msg) {
    const PortIndex port = frame.dst_port;
    const Duration t2 = frame.ingress_ts;
    auto respond = [this, node, port, seq = msg.seq, t2] {
        if (nodes_[node].failed) return;
        const auto tx = network_.transmit(port, PdelayRespMsg{seq, t2});
        network_.transmit(port, PdelayRespFollowUpMsg{seq, tx.egress_ts});
    };
    if (config_.pdelay_turnaround == Duration::zero()) {
        respond();
    } else {
        network_.scheduler().schedule_in(config_.pdelay_turnaround, EventKind::timer,
                                         network_.port(port).id, respond);
    }
}

void GptpEngine::handle_pdelay_resp(NodeIndex node, const Frame& frame, const PdelayRespMsg& msg) {
    auto& pd = nodes_[node].pdelay.at(frame.dst_port);
    if (!pd.outstanding || pd.outstanding->seq != msg.seq) return;
    pd.outstanding->t2 = msg.t2;
    pd.outstanding->t4 = frame.ingress_ts;
}

void GptpEngine::handle_pdelay_resp_follow_up(NodeIndex node, const Frame& frame,
                                              const PdelayRespFollowUpMsg& msg) {
    auto& pd = nodes_[node].pdelay.at(frame.dst_port);
    if (!pd.outstanding || pd.outstanding->seq != msg.seq || !pd.outstanding->t4) return;
    const PdelayExchange ex = *pd.outstanding;
    pd.outstanding.reset();
    if (config_.use_nrr) update_nrr(pd, msg.t3, *ex.t4);
    const auto delay = compute_mean_link_delay(ex.t1, *ex.t2, msg.t3, *ex.t4,
                                               config_.use_nrr ? pd.nrr : 1.0);
    ++pd.completed;
    if (delay) {
        pd.mean_link_delay = delay;
    } else {
        ++pd.discarded;
    }
    auto& e = network_.log()
                  .append(LogEntry{network_.scheduler().now(), LogKind::pdelay, node_id(node),
                                   network_.port(frame.dst_port).id, std::nullopt, std::nullopt,
                                   msg.seq, delay ? "" : "negative_delay", {}})
                  .with("t1", ns(ex.t1))
                  .with("t2", ns(*ex.t2))
                  .with("t3", ns(msg.t3))
                  .with("t4", ns(*ex.t4))
                  .with("nrr_ppb", std::llround((pd.nrr - 1.0) * 1e9));
    if (delay) e.with("mean_link_delay", ns(*delay));
}

}  // namespace gptpsim
