#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "gptpsim/messages.hpp"

namespace gptpsim {

enum class TraceCause : std::uint8_t { sample, pre_sync, post_sync };

std::string_view to_string(TraceCause cause);
std::optional<TraceCause> parse_trace_cause(std::string_view text);

/// One observation of a (node, domain) clock against true simulation time.
struct TraceRecord {
    std::int64_t time_ns = 0;
    std::string node;
    DomainId domain = 0;
    std::int64_t clock_time_ns = 0;
    std::int64_t diff_ns = 0;  ///< clock_time_ns - time_ns
    TraceCause cause = TraceCause::sample;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

}  // namespace gptpsim
