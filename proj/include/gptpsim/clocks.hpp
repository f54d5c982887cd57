#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gptpsim/sim_core.hpp"

namespace gptpsim {

/// Fractional frequency offset, e.g. 100 ppm == 1e-4.
struct Ppm {
    double value = 0.0;
    constexpr double fraction() const { return value * 1e-6; }
    friend constexpr bool operator==(Ppm, Ppm) = default;
};

struct NoDrift {
    friend constexpr bool operator==(NoDrift, NoDrift) = default;
};

struct ConstantDrift {
    Ppm rate;
    friend constexpr bool operator==(ConstantDrift, ConstantDrift) = default;
};

/// Each step_interval the rate is redrawn uniformly in [-step_bound, +step_bound].
struct RandomWalkDrift {
    Ppm step_bound;
    Duration step_interval = std::chrono::seconds(1);
    friend constexpr bool operator==(RandomWalkDrift, RandomWalkDrift) = default;
};

using DriftModel = std::variant<NoDrift, ConstantDrift, RandomWalkDrift>;

inline constexpr double kMaxConstantDriftPpm = 1e4;

/// Throws std::invalid_argument when the model violates its bounds.
void validate(const DriftModel& drift);

/// Largest |rate - 1| the model can ever produce, in ppm.
double max_abs_drift_ppm(const DriftModel& drift);

std::string describe(const DriftModel& drift);

/// A constant-rate stretch of an oscillator's timeline.
struct DriftSegment {
    SimTime start;
    double drift = 0.0;  ///< rate - 1
    Duration local_at_start{0};

    double rate() const { return 1.0 + drift; }
};

/// Free-running hardware clock. Local time is a continuous piecewise-affine
/// function of simulation time; random-walk segments are drawn lazily but
/// always in the same order, so reads at any time are reproducible.
class Oscillator {
public:
    Oscillator(std::string node, DriftModel drift, RngStream rng, Duration initial_offset = {});

    const std::string& node() const { return node_; }
    const DriftModel& drift_model() const { return drift_; }
    Duration initial_offset() const { return initial_offset_; }

    /// Materializes segments covering [0, until). Returns the segment count.
    std::size_t advance_drift(SimTime until);

    /// Local clock reading at t; materializes drift segments as needed.
    Duration local_time(SimTime t);

    /// Rate of the segment containing t.
    double rate_at(SimTime t);

    const std::vector<DriftSegment>& segments() const { return segments_; }

private:
    const DriftSegment& segment_for(SimTime t);
    double next_drift();

    std::string node_;
    DriftModel drift_;
    RngStream rng_;
    Duration initial_offset_;
    std::vector<DriftSegment> segments_;
};

/// Affine correction from local time to domain time.
struct AffineMap {
    Duration origin_local{0};
    Duration origin_domain{0};
    double rate_ratio = 1.0;

    Duration apply(Duration local) const;
    friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

struct SyncStamp {
    SimTime sim_time;
    std::uint32_t seq = 0;
};

/// Per-(node, domain) disciplined software clock on top of the node's oscillator.
struct DomainClock {
    std::string node;
    int domain = 0;
    AffineMap offset_map;
    std::optional<SyncStamp> last_sync;
};

struct ClockDiff {
    SimTime sim_time;
    Duration diff{0};  ///< domain time - sim time
};

struct SyncCorrection {
    ClockDiff before;
    ClockDiff after;
};

Duration domain_time(const DomainClock& clock, Oscillator& osc, SimTime t);
ClockDiff clock_diff(const DomainClock& clock, Oscillator& osc, SimTime t);

/// Steps the clock so that its domain time at `at_local` equals
/// `master_estimate` exactly. Diffs are reported at the current instant.
SyncCorrection apply_sync_correction(DomainClock& clock, Oscillator& osc, SimTime now,
                                     Duration master_estimate, Duration at_local,
                                     double rate_ratio);

}  // namespace gptpsim
