#include "gptpsim/simulation.hpp"

#include <algorithm>

namespace gptpsim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

const NodeReport* RunResult::node(std::string_view id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const NodeReport& n) { return n.node == id; });
    return it == nodes.end() ? nullptr : &*it;
}

std::map<DomainId, std::string> RunResult::grandmasters() const {
    std::map<DomainId, std::string> out;
    for (const auto& d : config.domains) out.emplace(d.id, d.gm_node);
    return out;
}

Simulation::Simulation(ScenarioConfig config, RunOptions options)
    : config_(std::move(config)), log_(options.keep_log) {
    if (auto issues = validate_scenario(config_); !issues.empty()) throw ScenarioError(std::move(issues));

    network_ = std::make_unique<Network>(scheduler_, log_, config_.frame_sizes);
    for (const auto& n : config_.nodes) {
        const auto clock = config_.clock_of(n.id);
        network_->add_node(n, Oscillator(n.id, clock.drift, RngStream(config_.seed, "oscillator/" + n.id),
                                         clock.initial_offset));
    }
    for (const auto& l : config_.links) network_->connect(l);

    engine_ = std::make_unique<GptpEngine>(*network_, config_.engine,
                                           [this](TraceRecord r) { trace_.push_back(std::move(r)); });
    for (const auto& d : config_.domains) {
        std::map<PortIndex, PortRole> roles;
        for (const auto& r : d.roles) roles.emplace(*network_->find_port(r.port), r.role);
        engine_->add_domain(d.id, *network_->find_node(d.gm_node), roles);
    }
    network_->set_receiver([this](const Frame& f) { engine_->on_frame(f); });

    // Faults are queued first so that, at equal times, they precede protocol timers.
    for (const auto& ev : config_.events) {
        scheduler_.schedule(event_time(ev), EventKind::fault, describe(ev), [this, ev] { apply_fault(ev); });
    }
    engine_->start();
    schedule_sample(SimTime{config_.sampling_interval});
}

NodeIndex Simulation::node_index(std::string_view id) const {
    const auto n = network_->find_node(id);
    if (!n) throw std::out_of_range("unknown node " + std::string(id));
    return *n;
}

void Simulation::apply_fault(const FaultEvent& event) {
    LogEntry e;
    e.time = scheduler_.now();
    e.kind = LogKind::fault;
    e.detail = describe(event);
    std::visit(overloaded{
                   [&](const ClockFailure& f) {
                       e.node = f.node;
                       engine_->fail_node(node_index(f.node));
                   },
                   [&](const LinkFailure& f) { network_->fail_link(*network_->find_link(f.link)); },
                   [&](const BlackHole& f) {
                       e.node = f.node;
                       e.port = port_id(f.node, f.port);
                       const auto port = *network_->find_port(e.port);
                       auto filter = network_->port(port).egress_filter;
                       for (int i = 0; i < kMessageClassCount; ++i) {
                           const auto cls = static_cast<MessageClass>(i);
                           if (f.filter.contains(cls)) filter.insert(cls);
                       }
                       network_->set_egress_filter(port, filter);
                   },
               },
               event);
    log_.append(std::move(e));
}

void Simulation::schedule_sample(SimTime t) {
    if (t > SimTime{config_.duration}) return;
    scheduler_.schedule(t, EventKind::sample, "sampler", [this] { sample(); });
}

void Simulation::sample() {
    const SimTime now = scheduler_.now();
    const auto now_ns = ns(now);
    for (NodeIndex n = 0; n < network_->node_count(); ++n) {
        const auto& state = engine_->node_state(n);
        if (state.failed) continue;
        auto& osc = network_->oscillator(n);
        for (const auto& d : state.domains) {
            const auto diff = clock_diff(d.clock, osc, now).diff;
            trace_.push_back(TraceRecord{now_ns, network_->node(n).spec.id, d.domain, now_ns + ns(diff), ns(diff),
                                         TraceCause::sample});
        }
    }
    schedule_sample(now + config_.sampling_interval);
}

std::uint64_t Simulation::run_until(SimTime t) {
    const auto count = scheduler_.run_until(std::min(t, SimTime{config_.duration}));
    processed_ += count;
    return count;
}

RunResult Simulation::run() {
    run_until(SimTime{config_.duration});
    return collect();
}

RunResult Simulation::collect() {
    RunResult result;
    result.config = config_;
    result.trace = std::move(trace_);
    result.log = std::move(log_);
    result.events_processed = processed_;
    result.end_time = scheduler_.now();
    result.frames = network_->counters();
    for (NodeIndex n = 0; n < network_->node_count(); ++n) {
        const auto& node = network_->node(n);
        const auto& state = engine_->node_state(n);
        NodeReport report;
        report.node = node.spec.id;
        report.kind = node.spec.kind;
        report.failed_at = state.failed_at;
        for (PortIndex p : node.ports) {
            const auto& port = network_->port(p);
            PortReport pr;
            pr.port = port.id;
            pr.sent = port.sent;
            pr.dropped = port.dropped;
            pr.filtered = port.filtered;
            if (auto it = state.pdelay.find(p); it != state.pdelay.end()) {
                pr.mean_link_delay = it->second.mean_link_delay;
                pr.nrr = it->second.nrr;
                pr.pdelay_completed = it->second.completed;
            }
            report.ports.push_back(std::move(pr));
        }
        for (const auto& d : state.domains) report.domains.emplace(d.domain, d.counters);
        result.nodes.push_back(std::move(report));
    }
    return result;
}

RunResult run_scenario(const ScenarioConfig& config, RunOptions options) {
    Simulation sim(config, options);
    return sim.run();
}

}  // namespace gptpsim
