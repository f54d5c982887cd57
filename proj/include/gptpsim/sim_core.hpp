#pragma once

// Discrete-event core: integer-nanosecond timeline, event queue, seeded streams.

#include <chrono>
#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace gptpsim {

using Duration = std::chrono::nanoseconds;

/// Ground-truth simulation clock. Time points count nanoseconds since start.
struct SimClock {
    using rep = Duration::rep;
    using period = Duration::period;
    using duration = Duration;
    using time_point = std::chrono::time_point<SimClock, Duration>;
    static constexpr bool is_steady = true;
};

using SimTime = SimClock::time_point;

constexpr SimTime at(Duration since_start) { return SimTime{since_start}; }
constexpr std::int64_t ns(Duration d) { return d.count(); }
constexpr std::int64_t ns(SimTime t) { return t.time_since_epoch().count(); }

class SchedulingInPast : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class InvalidRange : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class EventKind : std::uint8_t { timer, frame_delivery, fault, sample };

using EventHandle = std::uint64_t;

struct Event {
    SimTime fire_at;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::timer;
    std::string target;
    std::function<void()> action;
};

/// Single-threaded event scheduler. Events run in (fire_at, seq) order.
class Scheduler {
public:
    SimTime now() const { return now_; }

    /// Enqueues an action. Throws SchedulingInPast if fire_at < now().
    EventHandle schedule(SimTime fire_at, EventKind kind, std::string target,
                         std::function<void()> action);
    EventHandle schedule_in(Duration delay, EventKind kind, std::string target,
                            std::function<void()> action) {
        return schedule(now_ + delay, kind, std::move(target), std::move(action));
    }

    /// Returns false if the handle already fired or was cancelled.
    bool cancel(EventHandle handle);

    /// Processes every event with fire_at <= horizon, then sets now() to horizon.
    std::uint64_t run_until(SimTime horizon);

    std::size_t pending() const { return queue_.size() - cancelled_.size(); }
    std::uint64_t processed() const { return processed_; }

private:
    struct Entry {
        SimTime fire_at;
        std::uint64_t seq;
        std::size_t slot;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
            return a.seq > b.seq;
        }
    };

    SimTime now_{};
    std::uint64_t next_seq_ = 0;
    std::uint64_t processed_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
    std::vector<Event> slots_;
    std::vector<std::size_t> free_slots_;
    std::unordered_set<std::uint64_t> cancelled_;
    std::unordered_set<std::uint64_t> live_;
};

/// A named, reproducible random stream. The same (seed, stream_id) always
/// yields the same sequence; different ids are decorrelated through a hash.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string stream_id);

    std::uint64_t seed() const { return seed_; }
    const std::string& stream_id() const { return stream_id_; }

    /// Uniform draw in [lo, hi]. Throws InvalidRange if lo > hi.
    double draw_uniform(double lo, double hi);

private:
    std::uint64_t seed_;
    std::string stream_id_;
    std::mt19937_64 engine_;
};

std::uint64_t stream_key(std::uint64_t seed, std::string_view stream_id);

}  // namespace gptpsim
