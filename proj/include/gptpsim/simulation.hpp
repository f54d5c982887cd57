#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gptpsim/event_log.hpp"
#include "gptpsim/gptp.hpp"
#include "gptpsim/netmodel.hpp"
#include "gptpsim/scenario.hpp"
#include "gptpsim/trace.hpp"

namespace gptpsim {

struct RunOptions {
    bool keep_log = true;
};

struct PortReport {
    std::string port;
    std::optional<Duration> mean_link_delay;
    double nrr = 1.0;
    std::uint64_t pdelay_completed = 0;
    std::uint64_t sent = 0;
    std::uint64_t dropped = 0;
    std::uint64_t filtered = 0;
};

struct NodeReport {
    std::string node;
    NodeKind kind = NodeKind::end_station;
    std::optional<SimTime> failed_at;
    std::vector<PortReport> ports;
    std::map<DomainId, DomainCounters> domains;
};

/// Immutable outcome of a completed run.
struct RunResult {
    ScenarioConfig config;
    std::vector<TraceRecord> trace;
    EventLog log;
    std::uint64_t events_processed = 0;
    SimTime end_time;
    Network::Counters frames;
    std::vector<NodeReport> nodes;

    const NodeReport* node(std::string_view id) const;
    std::map<DomainId, std::string> grandmasters() const;
};

/// Builds network, clocks and protocol engines from a validated scenario and
/// runs it on a private scheduler.
class Simulation {
public:
    explicit Simulation(ScenarioConfig config, RunOptions options = {});
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// Runs to the configured duration and hands over the collected results.
    /// Call once; the trace and log are moved out.
    RunResult run();

    /// Advances to `t` (<= duration); for tests that inspect mid-run state.
    std::uint64_t run_until(SimTime t);

    Scheduler& scheduler() { return scheduler_; }
    Network& network() { return *network_; }
    GptpEngine& engine() { return *engine_; }
    EventLog& log() { return log_; }
    const std::vector<TraceRecord>& trace() const { return trace_; }
    const ScenarioConfig& config() const { return config_; }

    NodeIndex node_index(std::string_view id) const;

private:
    void apply_fault(const FaultEvent& event);
    void sample();
    void schedule_sample(SimTime t);
    RunResult collect();

    ScenarioConfig config_;
    Scheduler scheduler_;
    EventLog log_;
    std::unique_ptr<Network> network_;
    std::unique_ptr<GptpEngine> engine_;
    std::vector<TraceRecord> trace_;
    std::uint64_t processed_ = 0;
};

/// Convenience: validate, build and run.
RunResult run_scenario(const ScenarioConfig& config, RunOptions options = {});

}  // namespace gptpsim
