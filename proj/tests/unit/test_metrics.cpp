#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"

#include "gptpsim/metrics.hpp"
#include "gptpsim/scenario.hpp"
#include "gptpsim/simulation.hpp"

using namespace gptpsim;
using namespace std::chrono_literals;

namespace {

Series line(double ppm, std::int64_t offset_ns = 0, int n = 200, std::int64_t step_ns = 10'000'000) {
    Series s;
    for (int i = 0; i < n; ++i) {
        const std::int64_t t = i * step_ns;
        s.push_back({t, offset_ns + std::llround(ppm * 1e-6 * static_cast<double>(t))});
    }
    return s;
}

std::string csv_of(const std::vector<TraceRecord>& records) {
    std::ostringstream o;
    write_trace_csv(records, o);
    return o.str();
}

}  // namespace

TEST_CASE("convergence examples") {
    const auto ref = line(3.0);
    CHECK(convergence_time(ref, ref, 0) == 0);
    // A victim drifting away never converges.
    CHECK_FALSE(convergence_time(line(13.0), ref, 1000).has_value());
    // Off by 5 us until 0.5 s, then aligned.
    Series late = ref;
    for (auto& p : late) {
        if (p.time_ns < 500'000'000) p.value_ns += 5000;
    }
    CHECK(convergence_time(late, ref, 1000) == 500'000'000);
    CHECK_THROWS_AS(convergence_time(Series{}, ref, 1000), EmptyTrace);
}

TEST_CASE("divergence slope examples") {
    CHECK(std::abs(divergence_slope(line(100.0), 0, ns(2s)) - 100.0) <= 0.1);
    CHECK(divergence_slope(line(0.0, 42), 0, ns(2s)) == 0.0);
    CHECK(std::abs(divergence_slope(line(-7.5, 1000), ns(500ms), ns(1500ms)) + 7.5) <= 0.01);
    CHECK_THROWS_AS(divergence_slope(line(1.0), 0, ns(50ms)), TooFewSamples);
}

TEST_CASE("sample counts and master identity in the golden normal run") {
    const auto c = *builtin_scenario("normal");
    const auto r = run_scenario(c);
    std::set<std::int64_t> ticks;
    std::size_t samples = 0;
    for (const auto& t : r.trace) {
        if (t.cause != TraceCause::sample) continue;
        ++samples;
        ticks.insert(t.time_ns);
        CHECK(t.diff_ns == t.clock_time_ns - t.time_ns);
    }
    CHECK(ticks.size() == 2000);
    CHECK(samples == 80'000);

    // Grandmaster's own record is its oscillator's accumulated drift.
    Oscillator body("body_ctrl", c.clock_of("body_ctrl").drift, RngStream(c.seed, "oscillator/body_ctrl"));
    for (const auto& t : r.trace) {
        if (t.node == "body_ctrl" && t.domain == 0) {
            CHECK(t.diff_ns == ns(body.local_time(at(Duration{t.time_ns}))) - t.time_ns);
        }
    }
}

TEST_CASE("failed nodes stop producing records") {
    const auto r = run_scenario(*builtin_scenario("gm-failover"));
    std::size_t after = 0;
    for (const auto& t : r.trace) after += t.node == "body_ctrl" && t.time_ns >= ns(4s);
    CHECK(after == 0);
}

TEST_CASE("every correction is a pre/post pair that never moves away from the grandmaster") {
    const auto c = *builtin_scenario("normal");
    const auto r = run_scenario(c);
    std::map<std::string, Oscillator> gm;
    for (const char* n : {"body_ctrl", "main_computer"}) {
        gm.emplace(n, Oscillator(n, c.clock_of(n).drift, RngStream(c.seed, std::string("oscillator/") + n)));
    }
    const auto gms = r.grandmasters();
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        const auto& t = r.trace[i];
        if (t.cause != TraceCause::pre_sync) continue;
        REQUIRE(i + 1 < r.trace.size());
        const auto& post = r.trace[i + 1];
        CHECK(post.cause == TraceCause::post_sync);
        CHECK(post.time_ns == t.time_ns);
        CHECK(post.node == t.node);
        const auto g = ns(gm.at(gms.at(t.domain)).local_time(at(Duration{t.time_ns}))) - t.time_ns;
        CHECK(std::llabs(post.diff_ns - g) <= std::llabs(t.diff_ns - g) + 1);
    }
}

TEST_CASE("a slave starting 1 ms off converges within two sync intervals of its first correction") {
    auto c = *builtin_scenario("normal");
    c.clocks["ecu_rr"].initial_offset = 1ms;
    const auto r = run_scenario(c);
    const auto s = summarize(r);
    for (DomainId d = 0; d < 4; ++d) {
        std::int64_t first = -1;
        for (const auto& t : r.trace) {
            if (t.node == "ecu_rr" && t.domain == d && t.cause == TraceCause::post_sync) {
                first = t.time_ns;
                break;
            }
        }
        REQUIRE(first > 0);
        const auto* p = s.find("ecu_rr", d);
        REQUIRE(p->convergence_time_ns);
        CHECK(*p->convergence_time_ns > 0);
        CHECK(*p->convergence_time_ns <= first + 2 * ns(c.engine.sync_interval));
    }
}

TEST_CASE("synchronized sawtooth has negligible slope") {
    const auto r = run_scenario(*builtin_scenario("normal"));
    const auto series = sample_series(r.trace);
    for (DomainId d : {0, 2}) {
        const auto gm = d == 0 ? "body_ctrl" : "main_computer";
        const auto rel = relative_series(series.at({"ecu_rl", d}), series.at({gm, d}));
        // 15 s window spans 120 sync periods.
        CHECK(std::abs(divergence_slope(rel, ns(5s), ns(20s))) < 0.01);
    }
}

TEST_CASE("summary reconciles with the event log") {
    const auto r = run_scenario(*builtin_scenario("blackhole"));
    const auto s = summarize(r);
    std::map<std::pair<std::string, DomainId>, std::uint64_t> applied;
    std::map<std::string, std::uint64_t> filtered;
    for (const auto& e : r.log.entries()) {
        if (e.kind == LogKind::sync_applied) ++applied[{e.node, *e.domain}];
        if (e.kind == LogKind::filter) ++filtered[e.node];
    }
    for (const auto& p : s.pairs) CHECK(p.applied_sync_count == applied[{p.node, p.domain}]);
    CHECK(s.frames.at("sw_fl").filtered == filtered["sw_fl"]);
    const auto* victim = s.find("ecu_fl", 0);
    CHECK_FALSE(victim->convergence_time_ns.has_value());
    REQUIRE(victim->divergence_slope_ppm);
    CHECK(std::abs(*victim->divergence_slope_ppm - 10.0) < 0.5);
    CHECK_FALSE(victim->synchronized_at_end);
}

TEST_CASE("summary JSON carries every pair") {
    const auto r = run_scenario(*builtin_scenario("normal"));
    const auto j = to_json(summarize(r));
    CHECK(j["scenario"] == "normal");
    CHECK(j["pairs"].size() == 40);
    CHECK(j["pairs"][0].contains("convergence_time_ns"));
    CHECK(j["pairs"][0].contains("divergence_slope_ppm"));
}

TEST_CASE("grandmaster inference from a trace") {
    const auto r = run_scenario(*builtin_scenario("normal"));
    CHECK(infer_grandmasters(r.trace) == r.grandmasters());
}

TEST_CASE("CSV emission") {
    CHECK(csv_of({}) == std::string(kTraceCsvHeader) + "\n");
    const TraceRecord one{10, "ecu_fl", 2, 7, -3, TraceCause::post_sync};
    const auto text = csv_of({one});
    CHECK(text == std::string(kTraceCsvHeader) + "\n10,ecu_fl,2,7,-3,post_sync\n");
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("CSV round trip is lossless") {
    const auto r = run_scenario(*builtin_scenario("gm-failover"));
    std::istringstream in(csv_of(r.trace));
    CHECK(read_trace_csv(in) == r.trace);
}

TEST_CASE("malformed CSV is rejected with a line number") {
    auto parse = [](const std::string& body) {
        std::istringstream in(std::string(kTraceCsvHeader) + "\n" + body);
        return read_trace_csv(in);
    };
    CHECK_THROWS_AS(parse("1,a,0,1\n"), MalformedCsv);
    CHECK_THROWS_AS(parse("1,a,0,5,9,sample\n"), MalformedCsv);        // diff inconsistent
    CHECK_THROWS_AS(parse("5,a,0,5,0,sample\n1,a,0,1,0,sample\n"), MalformedCsv);  // time order
    CHECK_THROWS_AS(parse("1,a,0,1,0,bogus\n"), MalformedCsv);
    std::istringstream wrong_header("t,n\n");
    CHECK_THROWS_AS(read_trace_csv(wrong_header), MalformedCsv);
    try {
        parse("1,a,0,1,0,sample\nx,a,0,1,0,sample\n");
    } catch (const MalformedCsv& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("fault tolerance of single and double grandmaster loss") {
    const auto base = *builtin_scenario("normal");
    const auto primary = std::vector<FaultEvent>{ClockFailure{"body_ctrl", at(4s)}};
    const auto single = faults_tolerated(base, primary);
    CHECK(single.max_tolerated == 1);
    CHECK_FALSE(single.witness.has_value());

    const auto both = faults_tolerated(base, *builtin_fault_family("gm-failures"), kDefaultEpsilonNs, false);
    CHECK(both.max_tolerated == 1);
    REQUIRE(both.witness);
    CHECK(both.witness->size() == 2);
    CHECK(both.subsets.size() == 4);  // including the empty subset
    CHECK(ecu_nodes(base) == std::vector<std::string>{"ecu_fl", "ecu_fr", "ecu_rr", "ecu_rl"});
}
