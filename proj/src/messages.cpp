#include "gptpsim/messages.hpp"

#include <array>

namespace gptpsim {

namespace {
constexpr std::array<std::string_view, kMessageClassCount> kClassNames = {
    "sync", "follow_up", "pdelay_req", "pdelay_resp", "pdelay_resp_follow_up"};
}

std::string_view to_string(MessageClass cls) {
    return kClassNames.at(static_cast<std::size_t>(cls));
}

std::optional<MessageClass> parse_message_class(std::string_view text) {
    for (std::size_t i = 0; i < kClassNames.size(); ++i) {
        if (kClassNames[i] == text) return static_cast<MessageClass>(i);
    }
    return std::nullopt;
}

std::uint32_t FrameSizes::of(MessageClass cls) const {
    switch (cls) {
        case MessageClass::sync: return sync;
        case MessageClass::follow_up: return follow_up;
        case MessageClass::pdelay_req: return pdelay_req;
        case MessageClass::pdelay_resp: return pdelay_resp;
        case MessageClass::pdelay_resp_follow_up: return pdelay_resp_follow_up;
    }
    return kMinFrameBytes;
}

}  // namespace gptpsim
