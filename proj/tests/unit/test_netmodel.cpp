#include <cmath>
#include <vector>

#include "doctest.h"

#include "gptpsim/netmodel.hpp"

using namespace gptpsim;
using namespace std::chrono_literals;

namespace {

struct Pair {
    Scheduler sched;
    EventLog log;
    Network net{sched, log};
    std::vector<Frame> received;
    PortIndex a = 0, b = 0;
    LinkIndex link = 0;

    explicit Pair(DriftModel b_drift = NoDrift{}, Duration delay = 500ns) {
        net.add_node(NodeSpec{"a", NodeKind::end_station, {"p0"}}, Oscillator("a", NoDrift{}, RngStream(1, "a")));
        net.add_node(NodeSpec{"b", NodeKind::end_station, {"p0"}}, Oscillator("b", b_drift, RngStream(1, "b")));
        link = net.connect(LinkSpec{"ab", "a.p0", "b.p0", delay, kDefaultBitrate});
        a = *net.find_port("a.p0");
        b = *net.find_port("b.p0");
        net.set_receiver([this](const Frame& f) { received.push_back(f); });
    }

    TxResult send_at(SimTime t, PortIndex from, GptpMessage msg, std::uint32_t size = 64) {
        TxResult r;
        sched.schedule(t, EventKind::timer, "", [&, from, msg, size] { r = net.transmit(from, msg, size); });
        sched.run_until(t);
        return r;
    }
};

}  // namespace

TEST_CASE("serialization arithmetic") {
    CHECK(serialization_time(90, 100'000'000) == 7200ns);
    CHECK(serialization_time(64, 100'000'000) == 5120ns);
    CHECK(serialization_time(64, 1'000'000'000) == 512ns);
    CHECK(serialization_time(1, 3) == 2666666667ns);  // rounded up
}

TEST_CASE("delivery after exactly the propagation delay") {
    Pair p;
    p.send_at(at(1s), p.a, SyncMsg{0, 1});
    p.sched.run_until(at(2s));
    REQUIRE(p.received.size() == 1);
    CHECK(p.received[0].ingress_time == at(1s + 500ns));
    CHECK(p.received[0].ingress_ts - p.received[0].egress_ts == 500ns);
    CHECK(p.received[0].dst_port == p.b);
}

TEST_CASE("ingress timestamp comes from the receiver's clock") {
    Pair p(ConstantDrift{Ppm{100}});
    p.send_at(at(10s) - 500ns, p.a, SyncMsg{0, 1});
    p.sched.run_until(at(11s));
    REQUIRE(p.received.size() == 1);
    CHECK(ns(p.received[0].ingress_ts) == ns(10s) + std::llround(1e-4 * 1e10));
    CHECK(p.received[0].ingress_ts == p.net.local_time(1, at(10s)));
}

TEST_CASE("frames queue behind the one on the line") {
    Pair p;
    TxResult first, second;
    p.sched.schedule(at(1s), EventKind::timer, "", [&] {
        first = p.net.transmit(p.a, FollowUpMsg{0, 1}, 90);
        second = p.net.transmit(p.a, SyncMsg{0, 2}, 64);
    });
    p.sched.run_until(at(2s));
    CHECK(first.departure == at(1s));
    CHECK(second.departure == at(1s + 7200ns));
    REQUIRE(p.received.size() == 2);
    CHECK(std::holds_alternative<FollowUpMsg>(p.received[0].payload));
    CHECK(p.received[1].ingress_time == at(1s + 7200ns + 500ns));
    CHECK(p.received[1].egress_ts == 1s + 7200ns);
}

TEST_CASE("opposite directions do not share a transmitter") {
    Pair p;
    TxResult ab, ba;
    p.sched.schedule(at(1s), EventKind::timer, "", [&] {
        ab = p.net.transmit(p.a, FollowUpMsg{}, 90);
        ba = p.net.transmit(p.b, FollowUpMsg{}, 90);
    });
    p.sched.run_until(at(2s));
    CHECK(ab.departure == at(1s));
    CHECK(ba.departure == at(1s));
}

TEST_CASE("failed link drops and logs exactly once") {
    Pair p;
    p.net.fail_link(p.link);
    const auto r = p.send_at(at(1s), p.a, SyncMsg{0, 1});
    p.sched.run_until(at(2s));
    CHECK(r.outcome == TxOutcome::link_down);
    CHECK(p.received.empty());
    CHECK(p.log.count(LogKind::drop) == 1);
    CHECK(p.net.counters().dropped == 1);
    CHECK(p.log.entries().back().detail == "link_down");
}

TEST_CASE("egress filter discards only the configured classes") {
    Pair p;
    p.net.set_egress_filter(p.a, MessageClassSet::sync_only());
    p.sched.schedule(at(1s), EventKind::timer, "", [&] {
        CHECK(p.net.transmit(p.a, SyncMsg{0, 1}).outcome == TxOutcome::filtered);
        CHECK(p.net.transmit(p.a, FollowUpMsg{0, 1}).outcome == TxOutcome::filtered);
        CHECK(p.net.transmit(p.a, PdelayReqMsg{3}).sent());
        CHECK(p.net.transmit(p.b, SyncMsg{0, 1}).sent());  // other direction untouched
    });
    p.sched.run_until(at(2s));
    CHECK(p.received.size() == 2);
    CHECK(p.log.count(LogKind::filter) == 2);
    CHECK(p.net.port(p.a).filtered == 2);
}

TEST_CASE("undersized frames are padded to the Ethernet minimum") {
    Pair p;
    p.send_at(at(1s), p.a, SyncMsg{}, 10);
    p.sched.run_until(at(2s));
    REQUIRE(p.received.size() == 1);
    CHECK(p.received[0].size == kMinFrameBytes);
}

TEST_CASE("every sent frame is delivered exactly once, in order") {
    Pair p;
    p.sched.schedule(at(0s), EventKind::timer, "", [&] {
        for (std::uint32_t i = 0; i < 50; ++i) p.net.transmit(p.a, SyncMsg{0, i});
    });
    p.sched.run_until(at(1s));
    REQUIRE(p.received.size() == 50);
    for (std::uint32_t i = 0; i < 50; ++i) {
        CHECK(std::get<SyncMsg>(p.received[i].payload).seq == i);
        CHECK(p.received[i].ingress_time - p.received[i].egress_time == 500ns);
    }
    CHECK(p.net.counters().sent == 50);
    CHECK(p.net.counters().delivered == 50);
    CHECK(p.log.count(LogKind::tx) == 50);
    CHECK(p.log.count(LogKind::rx) == 50);
}

TEST_CASE("topology errors") {
    Scheduler s;
    EventLog log;
    Network net(s, log);
    net.add_node(NodeSpec{"a", NodeKind::bridge, {"p0", "p1"}}, Oscillator("a", NoDrift{}, RngStream(1, "a")));
    net.add_node(NodeSpec{"b", NodeKind::end_station, {"p0"}}, Oscillator("b", NoDrift{}, RngStream(1, "b")));
    net.connect(LinkSpec{"l", "a.p0", "b.p0"});
    CHECK_THROWS_AS(net.connect(LinkSpec{"l2", "a.p1", "b.p0"}), NetworkError);
    CHECK_THROWS_AS(net.connect(LinkSpec{"l3", "a.p1", "c.p0"}), NetworkError);
    CHECK_THROWS_AS(net.add_node(NodeSpec{"a", NodeKind::end_station, {"p9"}},
                                 Oscillator("a", NoDrift{}, RngStream(1, "a"))),
                    NetworkError);
    // Unattached port logs a drop.
    s.schedule(at(0s), EventKind::timer, "", [&] {
        CHECK(net.transmit(*net.find_port("a.p1"), SyncMsg{}).outcome == TxOutcome::unattached);
    });
    s.run_until(at(1s));
    CHECK(log.count(LogKind::drop) == 1);
}
