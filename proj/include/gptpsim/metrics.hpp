#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gptpsim/scenario.hpp"
#include "gptpsim/simulation.hpp"
#include "gptpsim/trace.hpp"

namespace gptpsim {

class EmptyTrace : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TooFewSamples : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedCsv : public std::runtime_error {
public:
    MalformedCsv(std::size_t line, const std::string& reason);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

inline constexpr std::int64_t kDefaultEpsilonNs = 1'000;
inline constexpr std::string_view kTraceCsvHeader = "time_ns,node,domain,clock_time_ns,diff_ns,cause";

struct SeriesPoint {
    std::int64_t time_ns = 0;
    std::int64_t value_ns = 0;
    friend bool operator==(SeriesPoint, SeriesPoint) = default;
};

using Series = std::vector<SeriesPoint>;
using SeriesKey = std::pair<std::string, DomainId>;

/// Sample-cause diffs per (node, domain), time-ordered.
std::map<SeriesKey, Series> sample_series(const std::vector<TraceRecord>& trace);

/// node - reference at every instant both series share.
Series relative_series(const Series& node, const Series& reference);

/// Earliest sample time after which |node - reference| <= epsilon at every
/// shared sample. Throws EmptyTrace when the series share no samples.
std::optional<std::int64_t> convergence_time(const Series& node, const Series& reference,
                                             std::int64_t epsilon_ns);

/// Least-squares slope of value against time over [t0, t1], in ppm.
/// Throws TooFewSamples with fewer than 10 points in the window.
double divergence_slope(const Series& series, std::int64_t t0_ns, std::int64_t t1_ns);

struct PairSummary {
    std::string node;
    DomainId domain = 0;
    std::string gm;
    bool is_gm = false;
    std::optional<std::int64_t> convergence_time_ns;
    std::optional<std::int64_t> max_abs_diff_after_convergence_ns;
    std::int64_t peak_to_peak_ns = 0;
    std::uint64_t applied_sync_count = 0;
    std::optional<std::int64_t> last_sync_ns;
    std::optional<double> divergence_slope_ppm;
    bool gm_alive_at_end = false;
    bool synchronized_at_end = false;
};

struct NodeFrameCounts {
    std::uint64_t dropped = 0;
    std::uint64_t filtered = 0;
};

struct RunSummary {
    std::string scenario;
    std::uint64_t seed = 0;
    std::int64_t end_ns = 0;
    std::int64_t epsilon_ns = kDefaultEpsilonNs;
    std::vector<PairSummary> pairs;
    std::map<std::string, NodeFrameCounts> frames;
    std::map<std::string, std::int64_t> failed_at_ns;

    const PairSummary* find(std::string_view node, DomainId domain) const;
};

struct SummaryOptions {
    std::int64_t epsilon_ns = kDefaultEpsilonNs;
    /// A pair counts as synchronized at the end only if it applied a
    /// correction within this window before the last sample.
    std::int64_t stale_after_ns = 250'000'000;
};

/// Trace-only summary; `gms` names each domain's grandmaster.
RunSummary summarize(const std::vector<TraceRecord>& trace, const std::map<DomainId, std::string>& gms,
                     const SummaryOptions& options = {});

/// Summary including frame counts and failures from the run.
RunSummary summarize(const RunResult& run, std::int64_t epsilon_ns = kDefaultEpsilonNs);

/// Infers grandmasters from a trace: per domain, the one node that never
/// applied a correction. Domains where this is ambiguous are omitted.
std::map<DomainId, std::string> infer_grandmasters(const std::vector<TraceRecord>& trace);

nlohmann::ordered_json to_json(const RunSummary& summary);

void write_trace_csv(const std::vector<TraceRecord>& records, std::ostream& out);
/// Throws std::runtime_error (IoError) when the file cannot be written.
void emit_csv(const std::vector<TraceRecord>& records, const std::string& path);
std::vector<TraceRecord> read_trace_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Fault-tolerance sweep.

struct SubsetOutcome {
    std::vector<std::size_t> members;  ///< indices into the family
    bool all_ecus_synchronized = false;
    std::vector<std::string> unsynchronized_ecus;
};

struct FaultToleranceResult {
    std::size_t max_tolerated = 0;  ///< largest k with every k-subset tolerated
    std::optional<std::vector<FaultEvent>> witness;  ///< a failing (k+1)-subset
    std::vector<SubsetOutcome> subsets;
};

/// ECUs: end stations that are not the grandmaster of any domain.
std::vector<std::string> ecu_nodes(const ScenarioConfig& config);

/// Exhaustive over subsets of the family (at most 8 candidates). A subset is
/// tolerated when every ECU ends the run synchronized in at least one domain
/// whose grandmaster is still alive.
FaultToleranceResult faults_tolerated(const ScenarioConfig& base, const std::vector<FaultEvent>& family,
                                      std::int64_t epsilon_ns = kDefaultEpsilonNs, bool parallel = true);

}  // namespace gptpsim
