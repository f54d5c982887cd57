#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"

#include "gptpsim/sim_core.hpp"

using namespace gptpsim;
using namespace std::chrono_literals;

namespace {

struct Recorder {
    Scheduler sched;
    std::vector<std::string> fired;

    EventHandle add(SimTime t, std::string label) {
        return sched.schedule(t, EventKind::timer, label, [this, label] { fired.push_back(label); });
    }
};

}  // namespace

TEST_CASE("an event at now+0 fires before later ones") {
    Recorder r;
    r.add(at(5ms), "later");
    r.add(r.sched.now(), "now");
    r.sched.run_until(at(1s));
    CHECK(r.fired == std::vector<std::string>{"now", "later"});
}

TEST_CASE("equal fire times keep insertion order") {
    Recorder r;
    r.add(at(2s), "b1");
    r.add(at(1s), "a");
    r.add(at(2s), "b2");
    CHECK(r.sched.run_until(at(3s)) == 3);
    CHECK(r.fired == std::vector<std::string>{"a", "b1", "b2"});
}

TEST_CASE("cancelled events never fire") {
    Recorder r;
    const auto h = r.add(at(1s), "gone");
    r.add(at(2s), "kept");
    CHECK(r.sched.cancel(h));
    CHECK_FALSE(r.sched.cancel(h));
    CHECK(r.sched.pending() == 1);
    r.sched.run_until(at(5s));
    CHECK(r.fired == std::vector<std::string>{"kept"});
}

TEST_CASE("empty queue still advances to the horizon") {
    Scheduler s;
    CHECK(s.run_until(at(10s)) == 0);
    CHECK(s.now() == at(10s));
}

TEST_CASE("scheduling in the past throws") {
    Scheduler s;
    s.run_until(at(1s));
    CHECK_THROWS_AS(s.schedule(at(999ms), EventKind::timer, "x", [] {}), SchedulingInPast);
}

TEST_CASE("events beyond the horizon wait, events added while running are honoured") {
    Recorder r;
    r.add(at(1s), "first");
    r.sched.schedule(at(1s), EventKind::timer, "spawner", [&r] {
        r.add(r.sched.now(), "spawned-same-time");
        r.add(at(4s), "after-horizon");
    });
    r.sched.run_until(at(2s));
    CHECK(r.fired == std::vector<std::string>{"first", "spawned-same-time"});
    CHECK(r.sched.now() == at(2s));
    r.sched.run_until(at(4s));
    CHECK(r.fired.back() == "after-horizon");
}

TEST_CASE("processing order is the (fire_at, seq) order") {
    Scheduler s;
    std::vector<std::pair<SimTime, int>> seen;
    for (int i = 0; i < 200; ++i) {
        const auto t = at(std::chrono::milliseconds((i * 37) % 23));
        s.schedule(t, EventKind::timer, "", [&seen, &s, i] { seen.emplace_back(s.now(), i); });
    }
    s.run_until(at(1s));
    REQUIRE(seen.size() == 200);
    for (std::size_t k = 1; k < seen.size(); ++k) {
        const bool ordered = seen[k - 1].first < seen[k].first ||
                             (seen[k - 1].first == seen[k].first && seen[k - 1].second < seen[k].second);
        CHECK(ordered);
    }
}

TEST_CASE("draw_uniform degenerate and invalid ranges") {
    RngStream r(1, "a");
    CHECK(r.draw_uniform(0.0, 0.0) == 0.0);
    CHECK_THROWS_AS(r.draw_uniform(1.0, -1.0), InvalidRange);
}

TEST_CASE("draw_uniform mean over a million draws") {
    RngStream r(42, "stats");
    double sum = 0.0;
    double lo = 1.0, hi = -1.0;
    constexpr int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        const double v = r.draw_uniform(-1.0, 1.0);
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(lo >= -1.0);
    CHECK(hi <= 1.0);
}

TEST_CASE("same seed and id reproduce, other ids diverge") {
    RngStream a(7, "oscillator/x"), b(7, "oscillator/x"), c(7, "oscillator/y"), d(8, "oscillator/x");
    int same_c = 0, same_d = 0;
    for (int i = 0; i < 100; ++i) {
        const double va = a.draw_uniform(-1, 1);
        CHECK(va == b.draw_uniform(-1, 1));
        same_c += va == c.draw_uniform(-1, 1);
        same_d += va == d.draw_uniform(-1, 1);
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
    CHECK(stream_key(7, "oscillator/x") != stream_key(7, "oscillator/y"));
}
