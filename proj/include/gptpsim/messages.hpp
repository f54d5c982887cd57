#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

#include "gptpsim/sim_core.hpp"

namespace gptpsim {

using DomainId = int;

struct SyncMsg {
    DomainId domain = 0;
    std::uint32_t seq = 0;
};

struct FollowUpMsg {
    DomainId domain = 0;
    std::uint32_t seq = 0;
    Duration precise_origin{0};
    Duration correction{0};
    double rate_ratio = 1.0;
};

struct PdelayReqMsg {
    std::uint32_t seq = 0;
};

struct PdelayRespMsg {
    std::uint32_t seq = 0;
    Duration t2{0};
};

struct PdelayRespFollowUpMsg {
    std::uint32_t seq = 0;
    Duration t3{0};
};

using GptpMessage =
    std::variant<SyncMsg, FollowUpMsg, PdelayReqMsg, PdelayRespMsg, PdelayRespFollowUpMsg>;

enum class MessageClass : std::uint8_t {
    sync = 0,
    follow_up = 1,
    pdelay_req = 2,
    pdelay_resp = 3,
    pdelay_resp_follow_up = 4,
};

inline constexpr int kMessageClassCount = 5;

constexpr MessageClass message_class(const GptpMessage& msg) {
    return static_cast<MessageClass>(msg.index());
}

std::string_view to_string(MessageClass cls);
std::optional<MessageClass> parse_message_class(std::string_view text);

/// Small bitset over MessageClass.
class MessageClassSet {
public:
    constexpr MessageClassSet() = default;
    constexpr MessageClassSet(std::initializer_list<MessageClass> classes) {
        for (auto c : classes) insert(c);
    }
    constexpr void insert(MessageClass c) { bits_ |= bit(c); }
    constexpr bool contains(MessageClass c) const { return (bits_ & bit(c)) != 0; }
    constexpr bool empty() const { return bits_ == 0; }
    friend constexpr bool operator==(MessageClassSet, MessageClassSet) = default;

    static constexpr MessageClassSet sync_only() {
        return {MessageClass::sync, MessageClass::follow_up};
    }

private:
    static constexpr std::uint8_t bit(MessageClass c) {
        return static_cast<std::uint8_t>(1U << static_cast<unsigned>(c));
    }
    std::uint8_t bits_ = 0;
};

/// Optional domain carried by the message (pdelay is per link, not per domain).
constexpr std::optional<DomainId> message_domain(const GptpMessage& msg) {
    if (const auto* s = std::get_if<SyncMsg>(&msg)) return s->domain;
    if (const auto* f = std::get_if<FollowUpMsg>(&msg)) return f->domain;
    return std::nullopt;
}

constexpr std::uint32_t message_seq(const GptpMessage& msg) {
    return std::visit([](const auto& m) { return m.seq; }, msg);
}

/// Frame sizes on the wire, in bytes. Ethernet minimum is 64.
struct FrameSizes {
    std::uint32_t sync = 64;
    std::uint32_t follow_up = 90;
    std::uint32_t pdelay_req = 64;
    std::uint32_t pdelay_resp = 64;
    std::uint32_t pdelay_resp_follow_up = 90;

    std::uint32_t of(MessageClass cls) const;
    friend bool operator==(const FrameSizes&, const FrameSizes&) = default;
};

inline constexpr std::uint32_t kMinFrameBytes = 64;

}  // namespace gptpsim
