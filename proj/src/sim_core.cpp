#include "gptpsim/sim_core.hpp"

#include <utility>

namespace gptpsim {

EventHandle Scheduler::schedule(SimTime fire_at, EventKind kind, std::string target,
                                std::function<void()> action) {
    if (fire_at < now_) {
        throw SchedulingInPast("event scheduled at " + std::to_string(ns(fire_at)) +
                               " ns, now is " + std::to_string(ns(now_)) + " ns");
    }
    std::size_t slot;
    if (free_slots_.empty()) {
        slot = slots_.size();
        slots_.emplace_back();
    } else {
        slot = free_slots_.back();
        free_slots_.pop_back();
    }
    const auto seq = next_seq_++;
    slots_[slot] = Event{fire_at, seq, kind, std::move(target), std::move(action)};
    queue_.push(Entry{fire_at, seq, slot});
    live_.insert(seq);
    return seq;
}

bool Scheduler::cancel(EventHandle handle) {
    if (live_.erase(handle) == 0) return false;
    cancelled_.insert(handle);
    return true;
}

std::uint64_t Scheduler::run_until(SimTime horizon) {
    if (horizon < now_) {
        throw SchedulingInPast("horizon precedes current time");
    }
    std::uint64_t count = 0;
    while (!queue_.empty() && queue_.top().fire_at <= horizon) {
        const Entry entry = queue_.top();
        queue_.pop();
        if (cancelled_.erase(entry.seq) > 0) {
            free_slots_.push_back(entry.slot);
            continue;
        }
        live_.erase(entry.seq);
        now_ = entry.fire_at;
        auto action = std::move(slots_[entry.slot].action);
        slots_[entry.slot] = Event{};
        free_slots_.push_back(entry.slot);
        ++count;
        ++processed_;
        if (action) action();
    }
    now_ = horizon;
    return count;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t stream_key(std::uint64_t seed, std::string_view stream_id) {
    return splitmix64(splitmix64(seed) ^ fnv1a(stream_id));
}

RngStream::RngStream(std::uint64_t seed, std::string stream_id)
    : seed_(seed), stream_id_(std::move(stream_id)), engine_(stream_key(seed, stream_id_)) {}

double RngStream::draw_uniform(double lo, double hi) {
    if (lo > hi) {
        throw InvalidRange("draw_uniform: lo > hi");
    }
    // 53 random bits mapped onto [0, 1]; the distribution classes in <random>
    // are not specified bit-for-bit across standard libraries.
    const auto bits = engine_() >> 11;
    const double unit = static_cast<double>(bits) / static_cast<double>((1ULL << 53) - 1);
    return lo + (hi - lo) * unit;
}

}  // namespace gptpsim
