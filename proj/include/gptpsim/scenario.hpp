#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gptpsim/clocks.hpp"
#include "gptpsim/gptp.hpp"
#include "gptpsim/messages.hpp"
#include "gptpsim/netmodel.hpp"

namespace gptpsim {

struct ClockSpec {
    DriftModel drift = NoDrift{};
    Duration initial_offset{0};
    friend bool operator==(const ClockSpec&, const ClockSpec&) = default;
};

struct RoleAssignment {
    std::string port;  ///< network-wide port id
    PortRole role = PortRole::disabled;
    friend bool operator==(const RoleAssignment&, const RoleAssignment&) = default;
};

struct DomainSpec {
    DomainId id = 0;
    std::string gm_node;
    std::string direction;  ///< informational
    std::vector<RoleAssignment> roles;
    friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

struct ClockFailure {
    std::string node;
    SimTime at;
    friend bool operator==(const ClockFailure&, const ClockFailure&) = default;
};

struct LinkFailure {
    std::string link;
    SimTime at;
    friend bool operator==(const LinkFailure&, const LinkFailure&) = default;
};

/// A bridge that stays protocol-active but silently discards the filtered
/// message classes at one egress port.
struct BlackHole {
    std::string node;
    std::string port;  ///< port name local to the node
    SimTime at;
    MessageClassSet filter = MessageClassSet::sync_only();
    friend bool operator==(const BlackHole&, const BlackHole&) = default;
};

using FaultEvent = std::variant<ClockFailure, LinkFailure, BlackHole>;

SimTime event_time(const FaultEvent& event);
std::string describe(const FaultEvent& event);

struct ScenarioConfig {
    std::string name;
    std::string description;
    Duration duration = 20s;
    std::uint64_t seed = 1;
    Duration sampling_interval = 10ms;
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    std::map<std::string, ClockSpec> clocks;  ///< nodes without an entry do not drift
    std::vector<DomainSpec> domains;
    DomainEngineConfig engine;
    FrameSizes frame_sizes;
    std::vector<FaultEvent> events;

    const NodeSpec* find_node(std::string_view id) const;
    const LinkSpec* find_link(std::string_view id) const;
    const DomainSpec* find_domain(DomainId id) const;
    ClockSpec clock_of(std::string_view node) const;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

enum class ScenarioErrorKind : std::uint8_t {
    syntax,
    invalid_value,
    unknown_node,
    dangling_port,
    role_conflict,
    event_out_of_range,
    duplicate,
    disconnected,
};

std::string_view to_string(ScenarioErrorKind kind);

struct ScenarioIssue {
    ScenarioErrorKind kind = ScenarioErrorKind::syntax;
    int line = 0;  ///< 1-based; 0 when the config did not come from text
    std::string field;
    std::string reason;
};

std::string format(const ScenarioIssue& issue);

class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(std::vector<ScenarioIssue> issues);
    const std::vector<ScenarioIssue>& issues() const { return issues_; }

private:
    std::vector<ScenarioIssue> issues_;
};

/// Maps config items ("nodes:sw0", "events:2", ...) to source lines.
using LineLookup = std::function<int(const std::string& item)>;

/// Returns every violation found; empty means the config is valid.
std::vector<ScenarioIssue> validate_scenario(const ScenarioConfig& config,
                                             const LineLookup& lines = {});

/// Parses and validates. Throws ScenarioError carrying all issues.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario_file(const std::string& path);

std::string to_scenario_text(const ScenarioConfig& config);

// Value grammar shared with the CLI.
std::optional<Duration> parse_duration(std::string_view text);
std::string format_duration(Duration d);
std::optional<double> parse_ppm(std::string_view text);

/// The ring network: four bridges, four wheel-motor ECUs, a body controller
/// (grandmaster of domains 0 and 1) and a main computer (grandmaster of
/// domains 2 and 3, slave in 0 and 1).
ScenarioConfig builtin_quad_motor_ring();

struct BuiltinInfo {
    std::string_view name;
    std::string_view description;
};

const std::vector<BuiltinInfo>& builtin_catalog();
std::optional<ScenarioConfig> builtin_scenario(std::string_view name);

/// Candidate fault families for sweeps over the ring network.
std::optional<std::vector<FaultEvent>> builtin_fault_family(std::string_view name);
std::vector<std::string_view> builtin_family_names();

}  // namespace gptpsim
