#include "gptpsim/event_log.hpp"

#include <array>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gptpsim {

namespace {
constexpr std::array<std::string_view, 9> kKindNames = {
    "tx", "rx", "drop", "filter", "sync_applied", "sync_rejected", "relay", "pdelay", "fault"};
}

std::string_view to_string(LogKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

std::int64_t LogEntry::value(std::string_view key) const {
    for (const auto& [k, v] : values) {
        if (key == k) return v;
    }
    throw std::out_of_range("log entry has no value '" + std::string(key) + "'");
}

bool LogEntry::has(std::string_view key) const {
    for (const auto& kv : values) {
        if (key == kv.first) return true;
    }
    return false;
}

LogEntry& EventLog::append(LogEntry entry) {
    ++counts_[static_cast<std::size_t>(entry.kind)];
    if (!keep_) {
        scratch_ = std::move(entry);
        return scratch_;
    }
    entries_.push_back(std::move(entry));
    return entries_.back();
}

std::string format(const LogEntry& entry) {
    std::ostringstream out;
    out << ns(entry.time) << ' ' << to_string(entry.kind);
    if (!entry.node.empty()) out << " node=" << entry.node;
    if (!entry.port.empty()) out << " port=" << entry.port;
    if (entry.msg) out << " msg=" << to_string(*entry.msg);
    if (entry.domain) out << " domain=" << *entry.domain;
    if (entry.seq) out << " seq=" << *entry.seq;
    for (const auto& [k, v] : entry.values) out << ' ' << k << '=' << v;
    if (!entry.detail.empty()) out << " detail=" << entry.detail;
    return out.str();
}

void EventLog::write(std::ostream& out) const {
    for (const auto& e : entries_) out << format(e) << '\n';
}

}  // namespace gptpsim
