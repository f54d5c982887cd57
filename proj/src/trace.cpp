#include "gptpsim/trace.hpp"

namespace gptpsim {

std::string_view to_string(TraceCause cause) {
    switch (cause) {
        case TraceCause::sample: return "sample";
        case TraceCause::pre_sync: return "pre_sync";
        case TraceCause::post_sync: return "post_sync";
    }
    return "sample";
}

std::optional<TraceCause> parse_trace_cause(std::string_view text) {
    if (text == "sample") return TraceCause::sample;
    if (text == "pre_sync") return TraceCause::pre_sync;
    if (text == "post_sync") return TraceCause::post_sync;
    return std::nullopt;
}

}  // namespace gptpsim
