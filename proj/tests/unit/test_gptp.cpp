#include <cmath>
#include <map>
#include <set>
#include <string>

#include "doctest.h"

#include "gptpsim/gptp.hpp"
#include "gptpsim/scenario.hpp"
#include "gptpsim/simulation.hpp"

using namespace gptpsim;
using namespace std::chrono_literals;

namespace {

// Initiator `a` (ideal clock) and responder `b` on one link.
std::string pdelay_pair(const std::string& b_clock, bool use_nrr, const std::string& turnaround) {
    return "[general]\nname = pair\nduration = 3s\nuse_nrr = " + std::string(use_nrr ? "true" : "false") +
           "\npdelay_turnaround = " + turnaround +
           "\n[nodes]\na = end_station ports=p0\nb = end_station ports=p0\n"
           "[links]\nab = a=a.p0 b=b.p0 delay=500ns\n"
           "[clocks]\nb = " + b_clock + "\n";
}

// GM bridge with two master ports feeding two end stations.
constexpr const char* kFanOut = R"(
[general]
name = fan
duration = 2s
[nodes]
gm = bridge ports=p0,p1
x = end_station ports=p0
y = end_station ports=p0
[links]
l0 = a=gm.p0 b=x.p0
l1 = a=gm.p1 b=y.p0
[domains]
0 = gm=gm direction=out
[roles]
0 = gm.p0:master, gm.p1:master, x.p0:slave, y.p0:slave
)";

const PortReport& port_report(const RunResult& r, const std::string& node, const std::string& port) {
    for (const auto& p : r.node(node)->ports) {
        if (p.port == port) return p;
    }
    throw std::runtime_error("no port " + port);
}

}  // namespace

TEST_CASE("mean link delay hand examples") {
    CHECK(compute_mean_link_delay(0ns, 500ns, 600ns, 1100ns, 1.0) == 500ns);
    CHECK(compute_mean_link_delay(0ns, 0ns, 0ns, 0ns, 1.0) == 0ns);
    // Slightly negative results floor at zero, very negative ones are discarded.
    CHECK(compute_mean_link_delay(0ns, 0ns, 1000ns, 0ns, 1.0) == 0ns);
    CHECK_FALSE(compute_mean_link_delay(0ns, 0ns, 3000ns, 0ns, 1.0).has_value());
}

TEST_CASE("master estimate hand examples") {
    CHECK(compute_master_estimate(1s, 0ns, 500ns) == 1s + 500ns);
    CHECK(compute_master_estimate(1s, 1300ns, 500ns) == 1s + 1800ns);
    static_assert(compute_master_estimate(1s, 500ns + 800ns, 500ns) == 1'000'001'800ns);
}

TEST_CASE("neighbor rate ratio updates") {
    PdelayState s;
    CHECK(update_nrr(s, 1000ns, 2000ns) == NrrOutcome::no_history);
    CHECK(s.nrr == 1.0);

    SUBCASE("identical clocks") {
        CHECK(update_nrr(s, 1s + 1000ns, 1s + 2000ns) == NrrOutcome::updated);
        CHECK(s.nrr == 1.0);
    }
    SUBCASE("zero interval keeps the previous ratio") {
        CHECK(update_nrr(s, 5000ns, 2000ns) == NrrOutcome::zero_interval);
        CHECK(s.nrr == 1.0);
    }
    SUBCASE("pathological ratio is clamped and flagged") {
        CHECK(update_nrr(s, 1000ns + 1500ns, 2000ns + 1000ns) == NrrOutcome::clamped);
        CHECK(s.nrr == kNrrHigh);
        CHECK(s.nrr_clamped);
    }
    CHECK(s.history.size() <= 2);
}

TEST_CASE("pdelay against a +100 ppm responder with 100 us turnaround") {
    SUBCASE("with nrr: ratio within 1e-7 and delay within 2 ns") {
        const auto r = run_scenario(parse_scenario(pdelay_pair("constant rate=100ppm", true, "100us")));
        const auto& p = port_report(r, "a", "a.p0");
        CHECK(std::abs(p.nrr - 1.0001) < 1e-7);
        REQUIRE(p.mean_link_delay);
        CHECK(std::llabs(ns(*p.mean_link_delay) - 500) <= 2);
    }
    SUBCASE("without nrr: error is half of 100 ppm x 100 us") {
        const auto r = run_scenario(parse_scenario(pdelay_pair("constant rate=100ppm", false, "100us")));
        const auto& p = port_report(r, "a", "a.p0");
        REQUIRE(p.mean_link_delay);
        const auto err = 500 - ns(*p.mean_link_delay);
        CHECK(err >= 4);
        CHECK(err <= 6);
    }
}

TEST_CASE("round trip equals twice the delay plus responder hold in the event log") {
    const auto r = run_scenario(parse_scenario(pdelay_pair("none", false, "20us")));
    int n = 0;
    for (const auto& e : r.log.entries()) {
        if (e.kind != LogKind::pdelay) continue;
        // Both ends start at t = 0; 20 us is long enough that the Resp finds an idle line.
        CHECK(e.value("t4") - e.value("t1") == 2 * 500 + 20'000);
        CHECK(e.value("t3") - e.value("t2") == 20'000);
        CHECK(e.value("mean_link_delay") == 500);
        ++n;
    }
    CHECK(n == 2 * 3);  // both ends, one per second
}

TEST_CASE("zero turnaround: t3 - t2 is the Resp's own queueing, per the event log") {
    const auto r = run_scenario(parse_scenario(pdelay_pair("none", false, "0ns")));
    // t2 from the Req rx at b, t3 from b's Resp tx.
    std::map<std::uint32_t, std::int64_t> req_rx, resp_tx;
    for (const auto& e : r.log.entries()) {
        if (e.node != "b" || !e.seq) continue;
        if (e.kind == LogKind::rx && e.msg == MessageClass::pdelay_req) req_rx[*e.seq] = e.value("local");
        if (e.kind == LogKind::tx && e.msg == MessageClass::pdelay_resp) resp_tx[*e.seq] = e.value("local");
    }
    for (const auto& e : r.log.entries()) {
        if (e.kind != LogKind::pdelay || e.node != "a") continue;
        CHECK(e.value("t2") == req_rx.at(*e.seq));
        CHECK(e.value("t3") == resp_tx.at(*e.seq));
    }
}

TEST_CASE("grandmaster fan-out: two Sync and two FollowUp per tick") {
    const auto r = run_scenario(parse_scenario(kFanOut));
    std::map<std::int64_t, int> per_tick;
    std::set<std::uint32_t> seqs;
    for (const auto& e : r.log.entries()) {
        if (e.kind != LogKind::tx || e.node != "gm" || !e.domain) continue;
        ++per_tick[ns(e.time)];
        seqs.insert(*e.seq);
    }
    CHECK(per_tick.size() == 16);
    for (const auto& [t, n] : per_tick) CHECK(n == 4);
    CHECK(*seqs.begin() == 0);
    CHECK(*seqs.rbegin() == 15);
    CHECK(r.node("x")->domains.at(0).applied == 15);  // last Sync at 2s completes after the horizon
}

TEST_CASE("a failed grandmaster sends nothing") {
    auto cfg = parse_scenario(kFanOut);
    cfg.events.push_back(ClockFailure{"gm", at(0s)});
    const auto r = run_scenario(cfg);
    for (const auto& e : r.log.entries()) CHECK_FALSE((e.kind == LogKind::tx && e.node == "gm"));
    CHECK(r.node("gm")->domains.at(0).sync_ticks == 0);
}

TEST_CASE("ring run: tick, pdelay and relay bookkeeping") {
    const auto r = run_scenario(*builtin_scenario("normal"));

    SUBCASE("160 ticks per domain, seq 0..159") {
        for (DomainId d : {0, 1}) CHECK(r.node("body_ctrl")->domains.at(d).sync_ticks == 160);
        std::set<std::uint32_t> seqs;
        for (const auto& e : r.log.entries()) {
            if (e.kind == LogKind::tx && e.node == "body_ctrl" && e.msg == MessageClass::sync && e.domain == 0) {
                seqs.insert(*e.seq);
            }
        }
        CHECK(seqs.size() == 160);
        CHECK(*seqs.rbegin() == 159);
    }
    SUBCASE("20 completed pdelay exchanges per port, seq increasing by one") {
        std::map<std::string, std::vector<std::uint32_t>> per_port;
        for (const auto& e : r.log.entries()) {
            if (e.kind == LogKind::tx && e.msg == MessageClass::pdelay_req) per_port[e.port].push_back(*e.seq);
        }
        CHECK(per_port.size() == 20);
        for (const auto& [port, seqs] : per_port) {
            CHECK(seqs.size() == 21);  // the request sent at 20 s completes after the horizon
            for (std::size_t i = 0; i < seqs.size(); ++i) CHECK(seqs[i] == i);
        }
        for (const auto& n : r.nodes) {
            for (const auto& p : n.ports) CHECK(p.pdelay_completed == 20);
        }
    }
    SUBCASE("each (node, domain, seq) applied once; nothing returns to the grandmaster") {
        std::map<std::tuple<std::string, DomainId, std::uint32_t>, int> applied;
        for (const auto& e : r.log.entries()) {
            if (e.kind == LogKind::sync_applied) ++applied[{e.node, *e.domain, *e.seq}];
            if (e.kind == LogKind::rx && e.msg == MessageClass::sync) {
                const bool back_to_gm = (e.node == "body_ctrl" && *e.domain <= 1) ||
                                        (e.node == "main_computer" && *e.domain >= 2);
                CHECK_FALSE(back_to_gm);
            }
        }
        for (const auto& [key, n] : applied) CHECK(n == 1);
        // 9 non-GM nodes per domain; the Sync sent at 20 s is still in flight.
        CHECK(applied.size() == 4 * 9 * 159);
    }
    SUBCASE("masters never correct their own domains") {
        for (const auto& e : r.log.entries()) {
            if (e.kind != LogKind::sync_applied) continue;
            CHECK_FALSE((e.node == "body_ctrl" && *e.domain <= 1));
            CHECK_FALSE((e.node == "main_computer" && *e.domain >= 2));
        }
    }
    SUBCASE("passive ports never carry Sync") {
        // sw_rl faces sw_fl on p1; that port is passive in domain 0.
        for (const auto& e : r.log.entries()) {
            const bool leak = e.kind == LogKind::tx && e.port == "sw_rl.p1" && e.msg == MessageClass::sync &&
                              e.domain == 0;
            CHECK_FALSE(leak);
        }
    }
    SUBCASE("relayed correction = incoming + link delay + residence") {
        int n = 0;
        for (const auto& e : r.log.entries()) {
            if (e.kind != LogKind::relay) continue;
            CHECK(e.value("correction_out") ==
                  e.value("correction_in") + e.value("link_delay") + e.value("residence"));
            ++n;
        }
        CHECK(n > 0);
    }
    SUBCASE("no rejected frames in a healthy ring") {
        CHECK(r.log.count(LogKind::sync_rejected) == 0);
    }
}

TEST_CASE("post-correction residual is within 1 ns of the grandmaster") {
    const auto cfg = *builtin_scenario("normal");
    const auto r = run_scenario(cfg);
    // Independent replicas of the grandmaster oscillators.
    std::map<DomainId, Oscillator> gm;
    for (const auto& d : cfg.domains) {
        const auto clock = cfg.clock_of(d.gm_node);
        gm.emplace(d.id, Oscillator(d.gm_node, clock.drift, RngStream(cfg.seed, "oscillator/" + d.gm_node),
                                    clock.initial_offset));
    }
    int checked = 0;
    for (const auto& t : r.trace) {
        if (t.cause != TraceCause::post_sync) continue;
        const auto gm_diff = ns(gm.at(t.domain).local_time(at(Duration{t.time_ns}))) - t.time_ns;
        CHECK(std::llabs(t.diff_ns - gm_diff) <= 1);
        ++checked;
    }
    CHECK(checked == 4 * 9 * 159);
}

TEST_CASE("two-step integrity on hand-fed frames") {
    auto cfg = parse_scenario(kFanOut);
    cfg.engine.link_delay_fallback = 500ns;
    Simulation sim(cfg);
    auto& net = sim.network();
    auto& eng = sim.engine();
    const PortIndex x = *net.find_port("x.p0");
    const PortIndex gm = *net.find_port("gm.p0");
    const NodeIndex xn = sim.node_index("x");
    auto frame = [&](GptpMessage m) {
        Frame f;
        f.src_port = gm;
        f.dst_port = x;
        f.payload = m;
        f.ingress_time = sim.scheduler().now();
        f.ingress_ts = net.local_time(xn, f.ingress_time);
        return f;
    };
    const auto& counters = eng.node_state(xn).find_domain(0)->counters;

    eng.on_frame(frame(FollowUpMsg{0, 5, 1s, 0ns, 1.0}));
    CHECK(counters.orphan_follow_up == 1);
    CHECK(counters.applied == 0);

    eng.on_frame(frame(SyncMsg{0, 5}));
    eng.on_frame(frame(SyncMsg{0, 6}));  // supersedes seq 5
    eng.on_frame(frame(FollowUpMsg{0, 5, 1s, 0ns, 1.0}));
    CHECK(counters.superseded == 1);
    CHECK(counters.orphan_follow_up == 2);

    eng.on_frame(frame(SyncMsg{0, 7}));
    eng.on_frame(frame(FollowUpMsg{0, 7, 1s, 0ns, 1.0}));
    CHECK(counters.applied == 1);
    CHECK(eng.domain_time_of(xn, 0, sim.scheduler().now()) == 1s + 500ns);

    eng.on_frame(frame(SyncMsg{0, 3}));
    eng.on_frame(frame(FollowUpMsg{0, 3, 2s, 0ns, 1.0}));
    CHECK(counters.stale_seq == 1);
    CHECK(counters.applied == 1);
}

TEST_CASE("follow-up without any link delay is rejected") {
    const auto cfg = parse_scenario(kFanOut);
    Simulation sim(cfg);
    const PortIndex x = *sim.network().find_port("x.p0");
    Frame f;
    f.dst_port = x;
    f.payload = SyncMsg{0, 1};
    sim.engine().on_frame(f);
    f.payload = FollowUpMsg{0, 1, 1s, 0ns, 1.0};
    sim.engine().on_frame(f);
    CHECK(sim.engine().node_state(sim.node_index("x")).find_domain(0)->counters.no_link_delay == 1);
}

TEST_CASE("role table violations") {
    const auto cfg = parse_scenario(kFanOut);
    Simulation sim(cfg);
    auto& net = sim.network();
    const auto gm = sim.node_index("gm");
    CHECK_THROWS_AS(sim.engine().add_domain(5, gm, {{*net.find_port("gm.p0"), PortRole::slave}}), ProtocolError);
    CHECK_THROWS_AS(sim.engine().add_domain(6, sim.node_index("x"),
                                            {{*net.find_port("gm.p0"), PortRole::slave},
                                             {*net.find_port("gm.p1"), PortRole::slave}}),
                    ProtocolError);
}
