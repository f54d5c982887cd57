#include "gptpsim/metrics.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

namespace gptpsim {

MalformedCsv::MalformedCsv(std::size_t line, const std::string& reason)
    : std::runtime_error("malformed trace CSV at line " + std::to_string(line) + ": " + reason), line_(line) {}

std::map<SeriesKey, Series> sample_series(const std::vector<TraceRecord>& trace) {
    std::map<SeriesKey, Series> out;
    for (const auto& r : trace) {
        if (r.cause != TraceCause::sample) continue;
        out[{r.node, r.domain}].push_back(SeriesPoint{r.time_ns, r.diff_ns});
    }
    return out;
}

Series relative_series(const Series& node, const Series& reference) {
    Series out;
    auto it = reference.begin();
    for (const auto& p : node) {
        while (it != reference.end() && it->time_ns < p.time_ns) ++it;
        if (it == reference.end()) break;
        if (it->time_ns == p.time_ns) out.push_back(SeriesPoint{p.time_ns, p.value_ns - it->value_ns});
    }
    return out;
}

std::optional<std::int64_t> convergence_time(const Series& node, const Series& reference,
                                             std::int64_t epsilon_ns) {
    const auto rel = relative_series(node, reference);
    if (rel.empty()) throw EmptyTrace("no samples shared with the reference clock");
    auto violation = std::find_if(rel.rbegin(), rel.rend(), [&](const SeriesPoint& p) {
        return std::llabs(p.value_ns) > epsilon_ns;
    });
    if (violation == rel.rend()) return 0;
    if (violation == rel.rbegin()) return std::nullopt;
    return std::prev(violation)->time_ns;
}

double divergence_slope(const Series& series, std::int64_t t0_ns, std::int64_t t1_ns) {
    long double n = 0, mean_t = 0, mean_v = 0;
    for (const auto& p : series) {
        if (p.time_ns < t0_ns || p.time_ns > t1_ns) continue;
        n += 1;
        mean_t += static_cast<long double>(p.time_ns);
        mean_v += static_cast<long double>(p.value_ns);
    }
    if (n < 10) throw TooFewSamples("divergence_slope needs at least 10 samples in the window");
    mean_t /= n;
    mean_v /= n;
    long double stt = 0, stv = 0;
    for (const auto& p : series) {
        if (p.time_ns < t0_ns || p.time_ns > t1_ns) continue;
        const long double dt = static_cast<long double>(p.time_ns) - mean_t;
        stt += dt * dt;
        stv += dt * (static_cast<long double>(p.value_ns) - mean_v);
    }
    if (stt == 0) throw TooFewSamples("divergence_slope window has no time spread");
    return static_cast<double>(stv / stt * 1e6L);
}

const PairSummary* RunSummary::find(std::string_view node, DomainId domain) const {
    auto it = std::find_if(pairs.begin(), pairs.end(),
                           [&](const PairSummary& p) { return p.node == node && p.domain == domain; });
    return it == pairs.end() ? nullptr : &*it;
}

RunSummary summarize(const std::vector<TraceRecord>& trace, const std::map<DomainId, std::string>& gms,
                     const SummaryOptions& options) {
    RunSummary summary;
    summary.epsilon_ns = options.epsilon_ns;
    const auto series = sample_series(trace);
    std::map<SeriesKey, std::pair<std::uint64_t, std::int64_t>> syncs;  // count, last time
    for (const auto& r : trace) {
        summary.end_ns = std::max(summary.end_ns, r.time_ns);
        if (r.cause != TraceCause::post_sync) continue;
        auto& s = syncs[{r.node, r.domain}];
        ++s.first;
        s.second = r.time_ns;
    }
    std::int64_t last_sample = 0;
    for (const auto& [key, s] : series) {
        if (!s.empty()) last_sample = std::max(last_sample, s.back().time_ns);
    }

    for (const auto& [key, s] : series) {
        PairSummary p;
        p.node = key.first;
        p.domain = key.second;
        if (auto g = gms.find(p.domain); g != gms.end()) p.gm = g->second;
        p.is_gm = p.node == p.gm;
        if (auto it = syncs.find(key); it != syncs.end()) {
            p.applied_sync_count = it->second.first;
            p.last_sync_ns = it->second.second;
        }
        const auto gm_it = series.find({p.gm, p.domain});
        if (gm_it == series.end() || gm_it->second.empty()) {
            summary.pairs.push_back(std::move(p));
            continue;
        }
        const auto& reference = gm_it->second;
        p.gm_alive_at_end = reference.back().time_ns == last_sample;
        const auto rel = relative_series(s, reference);
        if (!rel.empty()) {
            p.convergence_time_ns = convergence_time(s, reference, options.epsilon_ns);
            const std::int64_t from = p.convergence_time_ns.value_or(rel.front().time_ns);
            std::int64_t lo = 0, hi = 0, max_abs = 0;
            bool first = true;
            for (const auto& pt : rel) {
                if (pt.time_ns < from) continue;
                lo = first ? pt.value_ns : std::min(lo, pt.value_ns);
                hi = first ? pt.value_ns : std::max(hi, pt.value_ns);
                max_abs = std::max(max_abs, static_cast<std::int64_t>(std::llabs(pt.value_ns)));
                first = false;
            }
            p.peak_to_peak_ns = hi - lo;
            if (p.convergence_time_ns) p.max_abs_diff_after_convergence_ns = max_abs;
            if (!p.convergence_time_ns) {
                const std::int64_t t0 = p.last_sync_ns.value_or(rel.front().time_ns);
                try {
                    p.divergence_slope_ppm = divergence_slope(rel, t0, rel.back().time_ns);
                } catch (const TooFewSamples&) {
                }
            }
        }
        if (p.is_gm) {
            p.synchronized_at_end = p.gm_alive_at_end;
        } else {
            p.synchronized_at_end = p.gm_alive_at_end && p.convergence_time_ns && p.last_sync_ns &&
                                    *p.last_sync_ns >= last_sample - options.stale_after_ns;
        }
        summary.pairs.push_back(std::move(p));
    }
    return summary;
}

RunSummary summarize(const RunResult& run, std::int64_t epsilon_ns) {
    SummaryOptions options;
    options.epsilon_ns = epsilon_ns;
    options.stale_after_ns = 2 * ns(run.config.engine.sync_interval);
    auto summary = summarize(run.trace, run.grandmasters(), options);
    summary.scenario = run.config.name;
    summary.seed = run.config.seed;
    summary.end_ns = ns(run.end_time);
    for (const auto& n : run.nodes) {
        NodeFrameCounts counts;
        for (const auto& p : n.ports) {
            counts.dropped += p.dropped;
            counts.filtered += p.filtered;
        }
        summary.frames.emplace(n.node, counts);
        if (n.failed_at) summary.failed_at_ns.emplace(n.node, ns(*n.failed_at));
    }
    return summary;
}

std::map<DomainId, std::string> infer_grandmasters(const std::vector<TraceRecord>& trace) {
    std::map<DomainId, std::set<std::string>> present, synced;
    for (const auto& r : trace) {
        present[r.domain].insert(r.node);
        if (r.cause == TraceCause::post_sync) synced[r.domain].insert(r.node);
    }
    std::map<DomainId, std::string> out;
    for (const auto& [d, nodes] : present) {
        std::vector<std::string> candidates;
        for (const auto& n : nodes) {
            if (!synced[d].contains(n)) candidates.push_back(n);
        }
        if (candidates.size() == 1) out.emplace(d, candidates.front());
    }
    return out;
}

nlohmann::ordered_json to_json(const RunSummary& s) {
    using nlohmann::ordered_json;
    auto opt = [](const auto& v) -> ordered_json {
        if (v) return ordered_json(*v);
        return nullptr;
    };
    ordered_json j;
    j["scenario"] = s.scenario;
    j["seed"] = s.seed;
    j["end_ns"] = s.end_ns;
    j["epsilon_ns"] = s.epsilon_ns;
    ordered_json pairs = ordered_json::array();
    for (const auto& p : s.pairs) {
        ordered_json e;
        e["node"] = p.node;
        e["domain"] = p.domain;
        e["gm"] = p.gm;
        e["is_gm"] = p.is_gm;
        e["convergence_time_ns"] = opt(p.convergence_time_ns);
        e["max_abs_diff_after_convergence_ns"] = opt(p.max_abs_diff_after_convergence_ns);
        e["peak_to_peak_ns"] = p.peak_to_peak_ns;
        e["applied_sync_count"] = p.applied_sync_count;
        e["last_sync_ns"] = opt(p.last_sync_ns);
        e["divergence_slope_ppm"] = opt(p.divergence_slope_ppm);
        e["gm_alive_at_end"] = p.gm_alive_at_end;
        e["synchronized_at_end"] = p.synchronized_at_end;
        pairs.push_back(std::move(e));
    }
    j["pairs"] = std::move(pairs);
    ordered_json frames = ordered_json::object();
    for (const auto& [node, c] : s.frames) frames[node] = {{"dropped", c.dropped}, {"filtered", c.filtered}};
    j["frames"] = std::move(frames);
    ordered_json failed = ordered_json::object();
    for (const auto& [node, t] : s.failed_at_ns) failed[node] = t;
    j["failed_at_ns"] = std::move(failed);
    return j;
}

void write_trace_csv(const std::vector<TraceRecord>& records, std::ostream& out) {
    out << kTraceCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.time_ns << ',' << r.node << ',' << r.domain << ',' << r.clock_time_ns << ',' << r.diff_ns << ','
            << to_string(r.cause) << '\n';
    }
}

void emit_csv(const std::vector<TraceRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("IoError: cannot open " + path + " for writing");
    write_trace_csv(records, out);
    out.flush();
    if (!out) throw std::runtime_error("IoError: write to " + path + " failed");
}

namespace {

template <class Int>
Int field_int(std::string_view text, std::size_t line, const char* name) {
    Int v{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw MalformedCsv(line, std::string("bad integer in ") + name);
    }
    return v;
}

}  // namespace

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
    std::vector<TraceRecord> out;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw MalformedCsv(1, "missing header");
    ++line_no;
    if (line != kTraceCsvHeader) throw MalformedCsv(1, "unexpected header '" + line + "'");
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            f.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (f.size() != 6) throw MalformedCsv(line_no, "expected 6 fields, got " + std::to_string(f.size()));
        TraceRecord r;
        r.time_ns = field_int<std::int64_t>(f[0], line_no, "time_ns");
        if (f[1].empty()) throw MalformedCsv(line_no, "empty node");
        r.node = std::string(f[1]);
        r.domain = field_int<DomainId>(f[2], line_no, "domain");
        r.clock_time_ns = field_int<std::int64_t>(f[3], line_no, "clock_time_ns");
        r.diff_ns = field_int<std::int64_t>(f[4], line_no, "diff_ns");
        const auto cause = parse_trace_cause(f[5]);
        if (!cause) throw MalformedCsv(line_no, "unknown cause '" + std::string(f[5]) + "'");
        r.cause = *cause;
        if (r.clock_time_ns - r.time_ns != r.diff_ns) throw MalformedCsv(line_no, "diff_ns != clock_time_ns - time_ns");
        if (!out.empty() && r.time_ns < out.back().time_ns) throw MalformedCsv(line_no, "records out of time order");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<std::string> ecu_nodes(const ScenarioConfig& config) {
    std::set<std::string> gms;
    for (const auto& d : config.domains) gms.insert(d.gm_node);
    std::vector<std::string> out;
    for (const auto& n : config.nodes) {
        if (n.kind == NodeKind::end_station && !gms.contains(n.id)) out.push_back(n.id);
    }
    return out;
}

namespace {

SubsetOutcome evaluate_subset(const ScenarioConfig& base, const std::vector<FaultEvent>& family,
                              unsigned mask, std::int64_t epsilon_ns) {
    SubsetOutcome outcome;
    ScenarioConfig config = base;
    for (std::size_t i = 0; i < family.size(); ++i) {
        if (mask & (1U << i)) {
            outcome.members.push_back(i);
            config.events.push_back(family[i]);
        }
    }
    const auto run = run_scenario(config, RunOptions{false});
    const auto summary = summarize(run, epsilon_ns);
    for (const auto& ecu : ecu_nodes(config)) {
        const bool ok = std::any_of(summary.pairs.begin(), summary.pairs.end(), [&](const PairSummary& p) {
            return p.node == ecu && p.synchronized_at_end;
        });
        if (!ok) outcome.unsynchronized_ecus.push_back(ecu);
    }
    outcome.all_ecus_synchronized = outcome.unsynchronized_ecus.empty();
    return outcome;
}

}  // namespace

FaultToleranceResult faults_tolerated(const ScenarioConfig& base, const std::vector<FaultEvent>& family,
                                      std::int64_t epsilon_ns, bool parallel) {
    if (family.size() > 8) throw std::invalid_argument("fault family larger than 8 candidates");
    if (auto issues = validate_scenario(base); !issues.empty()) throw ScenarioError(std::move(issues));
    const unsigned count = 1U << family.size();
    std::vector<SubsetOutcome> outcomes(count);
    if (parallel) {
        const unsigned workers = std::max(1U, std::thread::hardware_concurrency());
        for (unsigned start = 0; start < count; start += workers) {
            std::vector<std::future<SubsetOutcome>> batch;
            for (unsigned m = start; m < std::min(count, start + workers); ++m) {
                batch.push_back(std::async(std::launch::async, evaluate_subset, std::cref(base), std::cref(family), m,
                                           epsilon_ns));
            }
            for (unsigned i = 0; i < batch.size(); ++i) outcomes[start + i] = batch[i].get();
        }
    } else {
        for (unsigned m = 0; m < count; ++m) outcomes[m] = evaluate_subset(base, family, m, epsilon_ns);
    }

    FaultToleranceResult result;
    result.max_tolerated = family.size();
    for (std::size_t k = 0; k <= family.size(); ++k) {
        auto failing = std::find_if(outcomes.begin(), outcomes.end(), [&](const SubsetOutcome& o) {
            return o.members.size() == k && !o.all_ecus_synchronized;
        });
        if (failing != outcomes.end()) {
            result.max_tolerated = k == 0 ? 0 : k - 1;
            std::vector<FaultEvent> witness;
            for (auto i : failing->members) witness.push_back(family[i]);
            result.witness = std::move(witness);
            break;
        }
    }
    result.subsets = std::move(outcomes);
    return result;
}

}  // namespace gptpsim
