#include "gptpsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace gptpsim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(sep, start);
        const auto piece = trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
        if (!piece.empty()) out.push_back(piece);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> tokens(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        const auto start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::optional<double> parse_number(std::string_view text) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
    return value;
}

template <class Int>
std::optional<Int> parse_integer(std::string_view text) {
    Int value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

std::optional<bool> parse_bool(std::string_view text) {
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    return std::nullopt;
}

std::optional<std::uint64_t> parse_bitrate(std::string_view text) {
    struct Unit {
        std::string_view suffix;
        double scale;
    };
    static constexpr Unit kUnits[] = {{"Gbps", 1e9}, {"Mbps", 1e6}, {"kbps", 1e3}, {"bps", 1.0}};
    for (const auto& u : kUnits) {
        if (text.ends_with(u.suffix)) {
            const auto v = parse_number(text.substr(0, text.size() - u.suffix.size()));
            if (!v || *v <= 0) return std::nullopt;
            return static_cast<std::uint64_t>(std::llround(*v * u.scale));
        }
    }
    return parse_integer<std::uint64_t>(text);
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_bitrate(std::uint64_t bps) {
    if (bps % 1'000'000'000 == 0) return std::to_string(bps / 1'000'000'000) + "Gbps";
    if (bps % 1'000'000 == 0) return std::to_string(bps / 1'000'000) + "Mbps";
    if (bps % 1'000 == 0) return std::to_string(bps / 1'000) + "kbps";
    return std::to_string(bps) + "bps";
}

std::string format_filter(MessageClassSet filter) {
    std::string out;
    for (int i = 0; i < kMessageClassCount; ++i) {
        const auto cls = static_cast<MessageClass>(i);
        if (!filter.contains(cls)) continue;
        if (!out.empty()) out += ',';
        out += to_string(cls);
    }
    return out;
}

std::string format_drift(const ClockSpec& clock) {
    std::string out = std::visit(
        overloaded{
            [](NoDrift) { return std::string("none"); },
            [](ConstantDrift c) { return "constant rate=" + format_number(c.rate.value) + "ppm"; },
            [](RandomWalkDrift w) {
                return "random_walk step=" + format_number(w.step_bound.value) +
                       "ppm interval=" + format_duration(w.step_interval);
            },
        },
        clock.drift);
    if (clock.initial_offset != Duration::zero()) out += " offset=" + format_duration(clock.initial_offset);
    return out;
}

/// key=value tokens after an optional leading positional word.
struct Fields {
    std::vector<std::string_view> positional;
    std::vector<std::pair<std::string_view, std::string_view>> named;

    std::optional<std::string_view> get(std::string_view key) const {
        for (const auto& [k, v] : named) {
            if (k == key) return v;
        }
        return std::nullopt;
    }
};

Fields parse_fields(std::string_view value) {
    Fields f;
    for (auto tok : tokens(value)) {
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) {
            f.positional.push_back(tok);
        } else {
            f.named.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
        }
    }
    return f;
}

class Parser {
public:
    ScenarioConfig config;
    std::vector<ScenarioIssue> issues;
    std::map<std::string, int> lines;

    void run(std::string_view text) {
        std::string section;
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto nl = text.find('\n', pos);
            auto raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
            const auto line = trim(raw);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') {
                    error(ScenarioErrorKind::syntax, line_no, "section", "unterminated section header");
                    continue;
                }
                section = std::string(trim(line.substr(1, line.size() - 2)));
                static const std::set<std::string> kSections = {
                    "general", "nodes", "links", "clocks", "domains", "roles", "events"};
                if (!kSections.contains(section)) {
                    error(ScenarioErrorKind::syntax, line_no, "section", "unknown section [" + section + "]");
                }
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                error(ScenarioErrorKind::syntax, line_no, std::string(line), "expected 'key = value'");
                continue;
            }
            const auto key = trim(line.substr(0, eq));
            const auto value = trim(line.substr(eq + 1));
            if (key.empty()) {
                error(ScenarioErrorKind::syntax, line_no, "", "empty key");
                continue;
            }
            if (section.empty()) {
                error(ScenarioErrorKind::syntax, line_no, std::string(key), "entry outside any section");
            } else if (section == "general") {
                general(line_no, key, value);
            } else if (section == "nodes") {
                node(line_no, key, value);
            } else if (section == "links") {
                link(line_no, key, value);
            } else if (section == "clocks") {
                clock(line_no, key, value);
            } else if (section == "domains") {
                domain(line_no, key, value);
            } else if (section == "roles") {
                roles(line_no, key, value);
            } else if (section == "events") {
                event(line_no, key, value);
            }
        }
        attach_roles();
    }

private:
    std::map<DomainId, std::vector<std::pair<RoleAssignment, int>>> pending_roles_;
    std::set<std::string> seen_general_;

    void error(ScenarioErrorKind kind, int line, std::string field, std::string reason) {
        issues.push_back(ScenarioIssue{kind, line, std::move(field), std::move(reason)});
    }

    std::optional<Duration> duration_field(int line, std::string_view key, std::string_view text) {
        auto d = parse_duration(text);
        if (!d) error(ScenarioErrorKind::syntax, line, std::string(key), "bad duration '" + std::string(text) + "'");
        return d;
    }

    void general(int line, std::string_view key, std::string_view value) {
        const std::string k(key);
        if (!seen_general_.insert(k).second) {
            error(ScenarioErrorKind::duplicate, line, k, "repeated key");
            return;
        }
        auto& e = config.engine;
        auto set_duration = [&](Duration& target) {
            if (auto d = duration_field(line, key, value)) target = *d;
        };
        auto set_bool = [&](bool& target) {
            if (auto b = parse_bool(value)) {
                target = *b;
            } else {
                error(ScenarioErrorKind::syntax, line, k, "expected true or false");
            }
        };
        if (k == "name") {
            config.name = std::string(value);
        } else if (k == "description") {
            config.description = std::string(value);
        } else if (k == "duration") {
            if (auto d = duration_field(line, key, value)) config.duration = *d;
        } else if (k == "seed") {
            if (auto s = parse_integer<std::uint64_t>(value)) {
                config.seed = *s;
            } else {
                error(ScenarioErrorKind::syntax, line, k, "expected unsigned integer");
            }
        } else if (k == "sampling_interval") {
            set_duration(config.sampling_interval);
        } else if (k == "sync_interval") {
            set_duration(e.sync_interval);
        } else if (k == "pdelay_interval") {
            set_duration(e.pdelay_interval);
        } else if (k == "residence_time") {
            set_duration(e.residence_time);
        } else if (k == "pdelay_turnaround") {
            set_duration(e.pdelay_turnaround);
        } else if (k == "use_nrr") {
            set_bool(e.use_nrr);
        } else if (k == "use_rate_ratio") {
            set_bool(e.use_rate_ratio);
        } else if (k == "link_delay_fallback") {
            if (value == "none") {
                e.link_delay_fallback.reset();
            } else if (auto d = duration_field(line, key, value)) {
                e.link_delay_fallback = *d;
            }
        } else if (k == "frame_bytes") {
            const auto f = parse_fields(value);
            if (!f.positional.empty()) error(ScenarioErrorKind::syntax, line, k, "expected class=bytes pairs");
            for (const auto& [cls_name, bytes_text] : f.named) {
                const auto cls = parse_message_class(cls_name);
                const auto bytes = parse_integer<std::uint32_t>(bytes_text);
                if (!cls || !bytes) {
                    error(ScenarioErrorKind::syntax, line, k, "bad entry '" + std::string(cls_name) + "'");
                    continue;
                }
                auto& sizes = config.frame_sizes;
                switch (*cls) {
                    case MessageClass::sync: sizes.sync = *bytes; break;
                    case MessageClass::follow_up: sizes.follow_up = *bytes; break;
                    case MessageClass::pdelay_req: sizes.pdelay_req = *bytes; break;
                    case MessageClass::pdelay_resp: sizes.pdelay_resp = *bytes; break;
                    case MessageClass::pdelay_resp_follow_up: sizes.pdelay_resp_follow_up = *bytes; break;
                }
            }
        } else {
            error(ScenarioErrorKind::syntax, line, k, "unknown key in [general]");
        }
    }

    void node(int line, std::string_view key, std::string_view value) {
        const auto f = parse_fields(value);
        NodeSpec spec;
        spec.id = std::string(key);
        if (f.positional.size() != 1) {
            error(ScenarioErrorKind::syntax, line, spec.id, "expected node kind (end_station or bridge)");
            return;
        }
        if (f.positional[0] == "bridge") {
            spec.kind = NodeKind::bridge;
        } else if (f.positional[0] == "end_station") {
            spec.kind = NodeKind::end_station;
        } else {
            error(ScenarioErrorKind::syntax, line, spec.id, "unknown node kind '" + std::string(f.positional[0]) + "'");
            return;
        }
        const auto ports = f.get("ports");
        if (!ports) {
            error(ScenarioErrorKind::syntax, line, spec.id, "missing ports=");
            return;
        }
        for (auto p : split(*ports, ',')) spec.ports.emplace_back(p);
        lines.emplace("nodes:" + spec.id, line);
        config.nodes.push_back(std::move(spec));
    }

    void link(int line, std::string_view key, std::string_view value) {
        const auto f = parse_fields(value);
        LinkSpec spec;
        spec.id = std::string(key);
        const auto a = f.get("a");
        const auto b = f.get("b");
        if (!a || !b || !f.positional.empty()) {
            error(ScenarioErrorKind::syntax, line, spec.id, "expected a=<port> b=<port>");
            return;
        }
        spec.a = std::string(*a);
        spec.b = std::string(*b);
        if (auto d = f.get("delay")) {
            auto parsed = duration_field(line, "delay", *d);
            if (!parsed) return;
            spec.prop_delay = *parsed;
        }
        if (auto r = f.get("bitrate")) {
            auto parsed = parse_bitrate(*r);
            if (!parsed) {
                error(ScenarioErrorKind::syntax, line, "bitrate", "bad bitrate '" + std::string(*r) + "'");
                return;
            }
            spec.bitrate = *parsed;
        }
        lines.emplace("links:" + spec.id, line);
        config.links.push_back(std::move(spec));
    }

    void clock(int line, std::string_view key, std::string_view value) {
        const auto f = parse_fields(value);
        const std::string node(key);
        ClockSpec spec;
        if (f.positional.size() != 1) {
            error(ScenarioErrorKind::syntax, line, node, "expected drift model (none, constant, random_walk)");
            return;
        }
        const auto model = f.positional[0];
        if (model == "none") {
            spec.drift = NoDrift{};
        } else if (model == "constant") {
            const auto rate = f.get("rate");
            const auto ppm = rate ? parse_ppm(*rate) : std::nullopt;
            if (!ppm) {
                error(ScenarioErrorKind::syntax, line, node, "constant drift needs rate=<ppm>");
                return;
            }
            spec.drift = ConstantDrift{Ppm{*ppm}};
        } else if (model == "random_walk") {
            const auto step = f.get("step");
            const auto ppm = step ? parse_ppm(*step) : std::nullopt;
            if (!ppm) {
                error(ScenarioErrorKind::syntax, line, node, "random_walk needs step=<ppm>");
                return;
            }
            RandomWalkDrift walk{Ppm{*ppm}};
            if (auto iv = f.get("interval")) {
                auto d = duration_field(line, "interval", *iv);
                if (!d) return;
                walk.step_interval = *d;
            }
            spec.drift = walk;
        } else {
            error(ScenarioErrorKind::syntax, line, node, "unknown drift model '" + std::string(model) + "'");
            return;
        }
        if (auto off = f.get("offset")) {
            auto d = duration_field(line, "offset", *off);
            if (!d) return;
            spec.initial_offset = *d;
        }
        if (!config.clocks.emplace(node, spec).second) {
            error(ScenarioErrorKind::duplicate, line, node, "clock defined twice");
            return;
        }
        lines.emplace("clocks:" + node, line);
    }

    void domain(int line, std::string_view key, std::string_view value) {
        const auto id = parse_integer<DomainId>(key);
        if (!id || *id < 0 || *id > 127) {
            error(ScenarioErrorKind::syntax, line, std::string(key), "domain id must be an integer in 0..127");
            return;
        }
        const auto f = parse_fields(value);
        const auto gm = f.get("gm");
        if (!gm) {
            error(ScenarioErrorKind::syntax, line, std::string(key), "missing gm=<node>");
            return;
        }
        DomainSpec spec;
        spec.id = *id;
        spec.gm_node = std::string(*gm);
        if (auto dir = f.get("direction")) spec.direction = std::string(*dir);
        lines.emplace("domains:" + std::to_string(*id), line);
        config.domains.push_back(std::move(spec));
    }

    void roles(int line, std::string_view key, std::string_view value) {
        const auto id = parse_integer<DomainId>(key);
        if (!id) {
            error(ScenarioErrorKind::syntax, line, std::string(key), "roles key must be a domain id");
            return;
        }
        for (auto item : split(value, ',')) {
            const auto colon = item.rfind(':');
            if (colon == std::string_view::npos) {
                error(ScenarioErrorKind::syntax, line, std::string(item), "expected <port>:<role>");
                continue;
            }
            const auto port = trim(item.substr(0, colon));
            const auto role = parse_port_role(trim(item.substr(colon + 1)));
            if (!role) {
                error(ScenarioErrorKind::syntax, line, std::string(item), "unknown role");
                continue;
            }
            pending_roles_[*id].emplace_back(RoleAssignment{std::string(port), *role}, line);
        }
    }

    void event(int line, std::string_view key, std::string_view value) {
        if (key != "event") {
            error(ScenarioErrorKind::syntax, line, std::string(key), "expected 'event = ...'");
            return;
        }
        const auto f = parse_fields(value);
        if (f.positional.size() != 1) {
            error(ScenarioErrorKind::syntax, line, "event", "expected event kind");
            return;
        }
        const auto kind = f.positional[0];
        const auto at_text = f.get("at");
        if (!at_text) {
            error(ScenarioErrorKind::syntax, line, "at", "missing at=<time>");
            return;
        }
        const auto at_d = duration_field(line, "at", *at_text);
        if (!at_d) return;
        const SimTime when{*at_d};
        std::optional<FaultEvent> ev;
        if (kind == "clock_failure") {
            if (auto n = f.get("node")) ev = ClockFailure{std::string(*n), when};
        } else if (kind == "link_failure") {
            if (auto l = f.get("link")) ev = LinkFailure{std::string(*l), when};
        } else if (kind == "blackhole") {
            const auto n = f.get("node");
            const auto p = f.get("port");
            if (n && p) {
                BlackHole bh{std::string(*n), std::string(*p), when};
                // A fully qualified port id is accepted as well.
                if (bh.port.starts_with(bh.node + ".")) bh.port = bh.port.substr(bh.node.size() + 1);
                if (auto filt = f.get("filter")) {
                    bh.filter = {};
                    for (auto name : split(*filt, ',')) {
                        if (auto cls = parse_message_class(name)) {
                            bh.filter.insert(*cls);
                        } else {
                            error(ScenarioErrorKind::syntax, line, "filter", "unknown message class '" + std::string(name) + "'");
                            return;
                        }
                    }
                }
                ev = bh;
            }
        } else {
            error(ScenarioErrorKind::syntax, line, "event", "unknown event kind '" + std::string(kind) + "'");
            return;
        }
        if (!ev) {
            error(ScenarioErrorKind::syntax, line, std::string(kind), "missing required event fields");
            return;
        }
        lines.emplace("events:" + std::to_string(config.events.size()), line);
        config.events.push_back(std::move(*ev));
    }

    void attach_roles() {
        for (auto& [id, list] : pending_roles_) {
            auto it = std::find_if(config.domains.begin(), config.domains.end(),
                                   [id](const DomainSpec& d) { return d.id == id; });
            if (it == config.domains.end()) {
                error(ScenarioErrorKind::invalid_value, list.front().second, std::to_string(id),
                      "roles given for undeclared domain");
                continue;
            }
            for (auto& [role, line] : list) {
                lines.emplace("roles:" + std::to_string(id) + ":" + role.port, line);
                it->roles.push_back(std::move(role));
            }
        }
    }
};

}  // namespace

std::optional<Duration> parse_duration(std::string_view text) {
    struct Unit {
        std::string_view suffix;
        std::int64_t ns;
    };
    static constexpr Unit kUnits[] = {{"ns", 1}, {"us", 1'000}, {"\xC2\xB5s", 1'000}, {"ms", 1'000'000}, {"s", 1'000'000'000}};
    text = trim(text);
    for (const auto& u : kUnits) {
        if (!text.ends_with(u.suffix)) continue;
        const auto number = trim(text.substr(0, text.size() - u.suffix.size()));
        if (number.empty()) return std::nullopt;
        if (auto whole = parse_integer<std::int64_t>(number)) return Duration{*whole * u.ns};
        // Decimal mantissa: split at the point to stay exact.
        const auto dot = number.find('.');
        if (dot == std::string_view::npos) return std::nullopt;
        const bool negative = number.front() == '-';
        const auto int_part = number.substr(negative ? 1 : 0, dot - (negative ? 1 : 0));
        const auto frac_part = number.substr(dot + 1);
        const auto ip = int_part.empty() ? std::optional<std::int64_t>{0} : parse_integer<std::int64_t>(int_part);
        if (!ip || *ip < 0 || frac_part.empty() || frac_part.size() > 9) return std::nullopt;
        const auto fp = parse_integer<std::int64_t>(frac_part);
        if (!fp || *fp < 0) return std::nullopt;
        std::int64_t scale = 1;
        for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;
        if ((*fp * u.ns) % scale != 0) return std::nullopt;  // finer than 1 ns
        const std::int64_t total = *ip * u.ns + *fp * u.ns / scale;
        return Duration{negative ? -total : total};
    }
    return std::nullopt;
}

std::string format_duration(Duration d) {
    const auto v = d.count();
    if (v != 0 && v % 1'000'000'000 == 0) return std::to_string(v / 1'000'000'000) + "s";
    if (v != 0 && v % 1'000'000 == 0) return std::to_string(v / 1'000'000) + "ms";
    if (v != 0 && v % 1'000 == 0) return std::to_string(v / 1'000) + "us";
    return std::to_string(v) + "ns";
}

std::optional<double> parse_ppm(std::string_view text) {
    struct Unit {
        std::string_view suffix;
        double ppm;
    };
    static constexpr Unit kUnits[] = {{"ppm", 1.0}, {"ppb", 1e-3}, {"us/s", 1.0}, {"ns/s", 1e-3}};
    for (const auto& u : kUnits) {
        if (text.ends_with(u.suffix)) {
            auto v = parse_number(text.substr(0, text.size() - u.suffix.size()));
            if (!v) return std::nullopt;
            return *v * u.ppm;
        }
    }
    return std::nullopt;
}

std::string_view to_string(ScenarioErrorKind kind) {
    switch (kind) {
        case ScenarioErrorKind::syntax: return "SyntaxError";
        case ScenarioErrorKind::invalid_value: return "InvalidValue";
        case ScenarioErrorKind::unknown_node: return "UnknownNode";
        case ScenarioErrorKind::dangling_port: return "DanglingPort";
        case ScenarioErrorKind::role_conflict: return "RoleConflict";
        case ScenarioErrorKind::event_out_of_range: return "EventOutOfRange";
        case ScenarioErrorKind::duplicate: return "Duplicate";
        case ScenarioErrorKind::disconnected: return "Disconnected";
    }
    return "Error";
}

std::string format(const ScenarioIssue& issue) {
    std::string out;
    if (issue.line > 0) out += "line " + std::to_string(issue.line) + ": ";
    out += to_string(issue.kind);
    if (!issue.field.empty()) out += " [" + issue.field + "]";
    out += ": " + issue.reason;
    return out;
}

namespace {
std::string join_issues(const std::vector<ScenarioIssue>& issues) {
    std::string out = "invalid scenario";
    for (const auto& i : issues) out += "\n  " + format(i);
    return out;
}
}  // namespace

ScenarioError::ScenarioError(std::vector<ScenarioIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

SimTime event_time(const FaultEvent& event) {
    return std::visit([](const auto& e) { return e.at; }, event);
}

std::string describe(const FaultEvent& event) {
    return std::visit(
        overloaded{
            [](const ClockFailure& e) {
                return "clock_failure node=" + e.node + " at=" + format_duration(e.at.time_since_epoch());
            },
            [](const LinkFailure& e) {
                return "link_failure link=" + e.link + " at=" + format_duration(e.at.time_since_epoch());
            },
            [](const BlackHole& e) {
                return "blackhole node=" + e.node + " port=" + e.port +
                       " at=" + format_duration(e.at.time_since_epoch()) + " filter=" + format_filter(e.filter);
            },
        },
        event);
}

const NodeSpec* ScenarioConfig::find_node(std::string_view id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const NodeSpec& n) { return n.id == id; });
    return it == nodes.end() ? nullptr : &*it;
}

const LinkSpec* ScenarioConfig::find_link(std::string_view id) const {
    auto it = std::find_if(links.begin(), links.end(), [&](const LinkSpec& l) { return l.id == id; });
    return it == links.end() ? nullptr : &*it;
}

const DomainSpec* ScenarioConfig::find_domain(DomainId id) const {
    auto it = std::find_if(domains.begin(), domains.end(), [&](const DomainSpec& d) { return d.id == id; });
    return it == domains.end() ? nullptr : &*it;
}

ClockSpec ScenarioConfig::clock_of(std::string_view node) const {
    if (auto it = clocks.find(std::string(node)); it != clocks.end()) return it->second;
    return ClockSpec{};
}

std::vector<ScenarioIssue> validate_scenario(const ScenarioConfig& config, const LineLookup& lines) {
    std::vector<ScenarioIssue> issues;
    auto line_of = [&](const std::string& item) { return lines ? lines(item) : 0; };
    auto add = [&](ScenarioErrorKind kind, const std::string& item, std::string field, std::string reason) {
        issues.push_back(ScenarioIssue{kind, line_of(item), std::move(field), std::move(reason)});
    };

    if (config.duration <= Duration::zero()) add(ScenarioErrorKind::invalid_value, "", "duration", "must be positive");
    if (config.sampling_interval <= Duration::zero()) {
        add(ScenarioErrorKind::invalid_value, "", "sampling_interval", "must be positive");
    }
    if (config.engine.sync_interval <= Duration::zero()) {
        add(ScenarioErrorKind::invalid_value, "", "sync_interval", "must be positive");
    }
    if (config.engine.pdelay_interval <= Duration::zero()) {
        add(ScenarioErrorKind::invalid_value, "", "pdelay_interval", "must be positive");
    }
    if (config.engine.residence_time < Duration::zero() || config.engine.pdelay_turnaround < Duration::zero()) {
        add(ScenarioErrorKind::invalid_value, "", "engine", "residence_time and pdelay_turnaround must be >= 0");
    }
    for (int i = 0; i < kMessageClassCount; ++i) {
        const auto cls = static_cast<MessageClass>(i);
        if (config.frame_sizes.of(cls) < kMinFrameBytes) {
            add(ScenarioErrorKind::invalid_value, "", "frame_bytes",
                std::string(to_string(cls)) + " frame below the 64-byte Ethernet minimum");
        }
    }

    // Nodes and ports.
    std::map<std::string, std::size_t> node_index;
    std::map<std::string, std::string> port_owner;  // port id -> node id
    for (const auto& n : config.nodes) {
        const std::string item = "nodes:" + n.id;
        if (n.id.empty() || n.id.find_first_of(".:, ") != std::string::npos) {
            add(ScenarioErrorKind::invalid_value, item, n.id, "node ids must be non-empty without '.', ':', ',' or spaces");
        }
        if (!node_index.emplace(n.id, node_index.size()).second) {
            add(ScenarioErrorKind::duplicate, item, n.id, "node defined twice");
            continue;
        }
        if (n.kind == NodeKind::end_station && n.ports.size() != 1) {
            add(ScenarioErrorKind::invalid_value, item, n.id, "end station must have exactly one port");
        }
        if (n.kind == NodeKind::bridge && n.ports.size() < 2) {
            add(ScenarioErrorKind::invalid_value, item, n.id, "bridge needs at least two ports");
        }
        for (const auto& p : n.ports) {
            if (!port_owner.emplace(port_id(n.id, p), n.id).second) {
                add(ScenarioErrorKind::duplicate, item, port_id(n.id, p), "port listed twice");
            }
        }
    }

    // Links.
    std::set<std::string> attached;
    std::set<std::string> link_ids;
    std::vector<std::size_t> parent(node_index.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& l : config.links) {
        const std::string item = "links:" + l.id;
        if (!link_ids.insert(l.id).second) add(ScenarioErrorKind::duplicate, item, l.id, "link defined twice");
        if (l.prop_delay < Duration::zero()) add(ScenarioErrorKind::invalid_value, item, l.id, "negative propagation delay");
        if (l.bitrate == 0) add(ScenarioErrorKind::invalid_value, item, l.id, "bitrate must be positive");
        bool ok = true;
        for (const auto* end : {&l.a, &l.b}) {
            if (!port_owner.contains(*end)) {
                add(ScenarioErrorKind::dangling_port, item, *end, "link " + l.id + " references an unknown port");
                ok = false;
            } else if (!attached.insert(*end).second) {
                add(ScenarioErrorKind::dangling_port, item, *end, "port attached to more than one link");
                ok = false;
            }
        }
        if (ok && l.a == l.b) {
            add(ScenarioErrorKind::invalid_value, item, l.id, "link connects a port to itself");
            ok = false;
        }
        if (ok) {
            const auto ra = find(node_index.at(port_owner.at(l.a)));
            const auto rb = find(node_index.at(port_owner.at(l.b)));
            parent[ra] = rb;
        }
    }
    if (!node_index.empty()) {
        const auto root = find(0);
        for (const auto& [id, idx] : node_index) {
            if (find(idx) != root) {
                add(ScenarioErrorKind::disconnected, "nodes:" + id, id, "node not connected to " + config.nodes.front().id);
            }
        }
    }

    // Clocks.
    for (const auto& [node, clock] : config.clocks) {
        const std::string item = "clocks:" + node;
        if (!node_index.contains(node)) add(ScenarioErrorKind::unknown_node, item, node, "clock for unknown node");
        try {
            validate(clock.drift);
        } catch (const std::invalid_argument& e) {
            add(ScenarioErrorKind::invalid_value, item, node, e.what());
        }
    }

    // Domains and roles.
    std::set<DomainId> domain_ids;
    for (const auto& d : config.domains) {
        const std::string item = "domains:" + std::to_string(d.id);
        if (!domain_ids.insert(d.id).second) {
            add(ScenarioErrorKind::duplicate, item, std::to_string(d.id), "domain defined twice");
        }
        if (!node_index.contains(d.gm_node)) {
            add(ScenarioErrorKind::unknown_node, item, d.gm_node, "grandmaster is not a known node");
        }
        std::map<std::string, std::string> slave_of;  // node -> slave port
        std::set<std::string> seen_ports;
        for (const auto& r : d.roles) {
            const std::string ritem = "roles:" + std::to_string(d.id) + ":" + r.port;
            auto owner = port_owner.find(r.port);
            if (owner == port_owner.end()) {
                add(ScenarioErrorKind::dangling_port, ritem, r.port, "role for unknown port");
                continue;
            }
            if (!seen_ports.insert(r.port).second) {
                add(ScenarioErrorKind::role_conflict, ritem, r.port,
                    "port given two roles in domain " + std::to_string(d.id));
                continue;
            }
            if (r.role != PortRole::disabled && !attached.contains(r.port)) {
                add(ScenarioErrorKind::dangling_port, ritem, r.port, "active role on a port with no link");
            }
            if (r.role == PortRole::slave) {
                if (owner->second == d.gm_node) {
                    add(ScenarioErrorKind::role_conflict, ritem, r.port,
                        "grandmaster " + d.gm_node + " cannot have a slave port in its domain " + std::to_string(d.id));
                }
                auto [it, inserted] = slave_of.emplace(owner->second, r.port);
                if (!inserted) {
                    add(ScenarioErrorKind::role_conflict, ritem, owner->second,
                        "two slave ports in domain " + std::to_string(d.id) + ": " + it->second + ", " + r.port);
                }
            }
        }
    }

    // Events.
    for (std::size_t i = 0; i < config.events.size(); ++i) {
        const std::string item = "events:" + std::to_string(i);
        const auto& ev = config.events[i];
        const auto t = event_time(ev).time_since_epoch();
        if (t < Duration::zero() || t > config.duration) {
            add(ScenarioErrorKind::event_out_of_range, item, "at",
                "event time " + format_duration(t) + " outside [0, " + format_duration(config.duration) + "]");
        }
        std::visit(overloaded{
                       [&](const ClockFailure& e) {
                           if (!node_index.contains(e.node)) {
                               add(ScenarioErrorKind::unknown_node, item, e.node, "clock_failure on unknown node");
                           }
                       },
                       [&](const LinkFailure& e) {
                           if (!link_ids.contains(e.link)) {
                               add(ScenarioErrorKind::invalid_value, item, e.link, "link_failure on unknown link");
                           }
                       },
                       [&](const BlackHole& e) {
                           const auto* n = config.find_node(e.node);
                           if (n == nullptr) {
                               add(ScenarioErrorKind::unknown_node, item, e.node, "blackhole on unknown node");
                               return;
                           }
                           if (n->kind != NodeKind::bridge) {
                               add(ScenarioErrorKind::invalid_value, item, e.node, "blackhole requires a bridge");
                           }
                           if (std::find(n->ports.begin(), n->ports.end(), e.port) == n->ports.end()) {
                               add(ScenarioErrorKind::dangling_port, item, port_id(e.node, e.port),
                                   "blackhole egress port does not exist");
                           }
                           if (e.filter.empty()) {
                               add(ScenarioErrorKind::invalid_value, item, "filter", "empty filter set");
                           }
                       },
                   },
                   ev);
    }
    return issues;
}

ScenarioConfig parse_scenario(std::string_view text) {
    Parser parser;
    parser.run(text);
    if (!parser.issues.empty()) throw ScenarioError(std::move(parser.issues));
    auto issues = validate_scenario(parser.config, [&](const std::string& item) {
        auto it = parser.lines.find(item);
        return it == parser.lines.end() ? 0 : it->second;
    });
    if (!issues.empty()) throw ScenarioError(std::move(issues));
    return std::move(parser.config);
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open scenario file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string to_scenario_text(const ScenarioConfig& c) {
    std::ostringstream out;
    const auto& e = c.engine;
    out << "[general]\n";
    out << "name = " << c.name << '\n';
    if (!c.description.empty()) out << "description = " << c.description << '\n';
    out << "duration = " << format_duration(c.duration) << '\n';
    out << "seed = " << c.seed << '\n';
    out << "sampling_interval = " << format_duration(c.sampling_interval) << '\n';
    out << "sync_interval = " << format_duration(e.sync_interval) << '\n';
    out << "pdelay_interval = " << format_duration(e.pdelay_interval) << '\n';
    out << "use_nrr = " << (e.use_nrr ? "true" : "false") << '\n';
    out << "use_rate_ratio = " << (e.use_rate_ratio ? "true" : "false") << '\n';
    out << "residence_time = " << format_duration(e.residence_time) << '\n';
    out << "pdelay_turnaround = " << format_duration(e.pdelay_turnaround) << '\n';
    out << "link_delay_fallback = "
        << (e.link_delay_fallback ? format_duration(*e.link_delay_fallback) : std::string("none")) << '\n';
    const auto& s = c.frame_sizes;
    out << "frame_bytes = sync=" << s.sync << " follow_up=" << s.follow_up << " pdelay_req=" << s.pdelay_req
        << " pdelay_resp=" << s.pdelay_resp << " pdelay_resp_follow_up=" << s.pdelay_resp_follow_up << '\n';

    out << "\n[nodes]\n";
    for (const auto& n : c.nodes) {
        out << n.id << " = " << to_string(n.kind) << " ports=";
        for (std::size_t i = 0; i < n.ports.size(); ++i) out << (i ? "," : "") << n.ports[i];
        out << '\n';
    }
    out << "\n[links]\n";
    for (const auto& l : c.links) {
        out << l.id << " = a=" << l.a << " b=" << l.b << " delay=" << format_duration(l.prop_delay)
            << " bitrate=" << format_bitrate(l.bitrate) << '\n';
    }
    out << "\n[clocks]\n";
    for (const auto& n : c.nodes) {
        if (auto it = c.clocks.find(n.id); it != c.clocks.end()) out << n.id << " = " << format_drift(it->second) << '\n';
    }
    for (const auto& [node, clock] : c.clocks) {
        if (c.find_node(node) == nullptr) out << node << " = " << format_drift(clock) << '\n';
    }
    out << "\n[domains]\n";
    for (const auto& d : c.domains) {
        out << d.id << " = gm=" << d.gm_node;
        if (!d.direction.empty()) out << " direction=" << d.direction;
        out << '\n';
    }
    out << "\n[roles]\n";
    for (const auto& d : c.domains) {
        // One line per node keeps the table readable.
        std::string current_node;
        bool open = false;
        for (const auto& r : d.roles) {
            const auto node = r.port.substr(0, r.port.find('.'));
            if (!open || node != current_node) {
                if (open) out << '\n';
                out << d.id << " = ";
                current_node = node;
                open = true;
            } else {
                out << ", ";
            }
            out << r.port << ':' << to_string(r.role);
        }
        if (open) out << '\n';
    }
    out << "\n[events]\n";
    for (const auto& ev : c.events) out << "event = " << describe(ev) << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Built-in ring scenario.

namespace {

struct RingLayout {
    static constexpr std::array<std::string_view, 4> kSwitches = {"sw_fl", "sw_fr", "sw_rr", "sw_rl"};
    static constexpr std::array<std::string_view, 4> kEcus = {"ecu_fl", "ecu_fr", "ecu_rr", "ecu_rl"};
    static constexpr std::string_view kBody = "body_ctrl";
    static constexpr std::string_view kMain = "main_computer";
    static constexpr std::size_t kBodySwitch = 0;
    static constexpr std::size_t kMainSwitch = 2;
};

std::string sw(std::size_t i) { return std::string(RingLayout::kSwitches[i % 4]); }
std::string ring_link_id(std::size_t i) {
    const auto from = sw(i).substr(3);
    const auto to = sw(i + 1).substr(3);
    return "ring_" + from + "_" + to;
}

/// Roles for a domain whose grandmaster hangs off switch `home` on port p3.
/// Clockwise traffic leaves each switch on p1 and enters on p0.
DomainSpec ring_domain(DomainId id, std::string_view gm, std::string_view other_controller,
                       std::size_t home, std::size_t other_home, bool clockwise) {
    DomainSpec d;
    d.id = id;
    d.gm_node = std::string(gm);
    d.direction = clockwise ? "clockwise" : "counterclockwise";
    const std::string out_port = clockwise ? "p1" : "p0";
    const std::string in_port = clockwise ? "p0" : "p1";
    auto role = [&](std::string port, PortRole r) { d.roles.push_back(RoleAssignment{std::move(port), r}); };

    role(port_id(gm, "p0"), PortRole::master);
    role(port_id(other_controller, "p0"), PortRole::slave);
    for (std::size_t hop = 0; hop < 4; ++hop) {
        const std::size_t s = clockwise ? (home + hop) % 4 : (home + 4 - hop) % 4;
        const auto name = sw(s);
        const bool first = hop == 0;
        const bool last = hop == 3;
        role(port_id(name, in_port), first ? PortRole::passive : PortRole::slave);
        role(port_id(name, out_port), last ? PortRole::passive : PortRole::master);
        role(port_id(name, "p2"), PortRole::master);
        if (first) role(port_id(name, "p3"), PortRole::slave);
        if (s == other_home) role(port_id(name, "p3"), PortRole::master);
    }
    for (const auto ecu : RingLayout::kEcus) role(port_id(ecu, "p0"), PortRole::slave);
    std::sort(d.roles.begin(), d.roles.end(),
              [](const RoleAssignment& a, const RoleAssignment& b) { return a.port < b.port; });
    return d;
}

}  // namespace

ScenarioConfig builtin_quad_motor_ring() {
    ScenarioConfig c;
    c.name = "quad-motor-ring";
    c.description = "four wheel-motor ECUs on a ring of four switches with redundant grandmasters";
    c.duration = 20s;
    c.seed = 1;

    c.nodes.push_back(NodeSpec{std::string(RingLayout::kBody), NodeKind::end_station, {"p0"}});
    c.nodes.push_back(NodeSpec{std::string(RingLayout::kMain), NodeKind::end_station, {"p0"}});
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<std::string> ports = {"p0", "p1", "p2"};
        if (i == RingLayout::kBodySwitch || i == RingLayout::kMainSwitch) ports.emplace_back("p3");
        c.nodes.push_back(NodeSpec{sw(i), NodeKind::bridge, ports});
    }
    for (const auto ecu : RingLayout::kEcus) c.nodes.push_back(NodeSpec{std::string(ecu), NodeKind::end_station, {"p0"}});

    for (std::size_t i = 0; i < 4; ++i) {
        c.links.push_back(LinkSpec{ring_link_id(i), port_id(sw(i), "p1"), port_id(sw(i + 1), "p0")});
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const std::string ecu(RingLayout::kEcus[i]);
        c.links.push_back(LinkSpec{"link_" + ecu, port_id(sw(i), "p2"), port_id(ecu, "p0")});
    }
    c.links.push_back(LinkSpec{"link_body_ctrl", port_id(sw(RingLayout::kBodySwitch), "p3"),
                               port_id(RingLayout::kBody, "p0")});
    c.links.push_back(LinkSpec{"link_main_computer", port_id(sw(RingLayout::kMainSwitch), "p3"),
                               port_id(RingLayout::kMain, "p0")});

    const RandomWalkDrift ring_walk{Ppm{0.5}, 1s};
    for (const auto& n : c.nodes) c.clocks[n.id] = ClockSpec{ring_walk, {}};

    using L = RingLayout;
    c.domains.push_back(ring_domain(0, L::kBody, L::kMain, L::kBodySwitch, L::kMainSwitch, true));
    c.domains.push_back(ring_domain(1, L::kBody, L::kMain, L::kBodySwitch, L::kMainSwitch, false));
    c.domains.push_back(ring_domain(2, L::kMain, L::kBody, L::kMainSwitch, L::kBodySwitch, true));
    c.domains.push_back(ring_domain(3, L::kMain, L::kBody, L::kMainSwitch, L::kBodySwitch, false));
    return c;
}

const std::vector<BuiltinInfo>& builtin_catalog() {
    static const std::vector<BuiltinInfo> kCatalog = {
        {"normal", "ring network under random-walk clock drift, all four domains healthy"},
        {"gm-failover", "body controller (grandmaster of domains 0/1) fails at 4 s; main computer domains 2/3 carry on"},
        {"blackhole", "front-left switch drops Sync/Follow_Up toward the front-left ECU from 2 s"},
    };
    return kCatalog;
}

std::optional<ScenarioConfig> builtin_scenario(std::string_view name) {
    auto c = builtin_quad_motor_ring();
    if (name == "normal") {
        c.name = "normal";
        c.description = std::string(builtin_catalog()[0].description);
        return c;
    }
    if (name == "gm-failover") {
        c.name = "gm-failover";
        c.description = std::string(builtin_catalog()[1].description);
        c.events.push_back(ClockFailure{std::string(RingLayout::kBody), SimTime{4s}});
        return c;
    }
    if (name == "blackhole") {
        c.name = "blackhole";
        c.description = std::string(builtin_catalog()[2].description);
        // Constant-rate grandmaster and victim so the victim's free-running
        // divergence after the attack is a clean 10 ppm line.
        c.clocks[std::string(RingLayout::kBody)] = ClockSpec{ConstantDrift{Ppm{0.5}}, {}};
        c.clocks["ecu_fl"] = ClockSpec{ConstantDrift{Ppm{10.5}}, {}};
        c.events.push_back(BlackHole{"sw_fl", "p2", SimTime{2s}, MessageClassSet::sync_only()});
        return c;
    }
    return std::nullopt;
}

std::optional<std::vector<FaultEvent>> builtin_fault_family(std::string_view name) {
    if (name == "gm-failures") {
        return std::vector<FaultEvent>{ClockFailure{std::string(RingLayout::kBody), SimTime{4s}},
                                       ClockFailure{std::string(RingLayout::kMain), SimTime{4s}}};
    }
    if (name == "ring-links") {
        std::vector<FaultEvent> out;
        for (std::size_t i = 0; i < 4; ++i) out.emplace_back(LinkFailure{ring_link_id(i), SimTime{4s}});
        return out;
    }
    return std::nullopt;
}

std::vector<std::string_view> builtin_family_names() { return {"gm-failures", "ring-links"}; }

}  // namespace gptpsim
