#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gptpsim/messages.hpp"
#include "gptpsim/sim_core.hpp"

namespace gptpsim {

enum class LogKind : std::uint8_t {
    tx,
    rx,
    drop,
    filter,
    sync_applied,
    sync_rejected,
    relay,
    pdelay,
    fault,
};

std::string_view to_string(LogKind kind);

struct LogEntry {
    SimTime time;
    LogKind kind = LogKind::tx;
    std::string node;
    std::string port;
    std::optional<MessageClass> msg;
    std::optional<DomainId> domain;
    std::optional<std::uint32_t> seq;
    std::string detail;
    std::vector<std::pair<const char*, std::int64_t>> values;

    LogEntry& with(const char* key, std::int64_t value) {
        values.emplace_back(key, value);
        return *this;
    }
    /// Throws std::out_of_range if the key is absent.
    std::int64_t value(std::string_view key) const;
    bool has(std::string_view key) const;
};

/// Append-only record of everything observable on the network.
class EventLog {
public:
    explicit EventLog(bool keep_entries = true) : keep_(keep_entries) {}

    LogEntry& append(LogEntry entry);
    const std::vector<LogEntry>& entries() const { return entries_; }
    std::uint64_t count(LogKind kind) const { return counts_[static_cast<std::size_t>(kind)]; }
    bool keeps_entries() const { return keep_; }

    void write(std::ostream& out) const;

private:
    bool keep_;
    std::vector<LogEntry> entries_;
    std::uint64_t counts_[9] = {};
    LogEntry scratch_;
};

std::string format(const LogEntry& entry);

}  // namespace gptpsim
