#include "gptpsim/clocks.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gptpsim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

Duration scaled(Duration span, double fraction) {
    return Duration{std::llround(static_cast<double>(span.count()) * fraction)};
}

}  // namespace

void validate(const DriftModel& drift) {
    std::visit(overloaded{
                   [](NoDrift) {},
                   [](ConstantDrift c) {
                       if (!(std::abs(c.rate.value) <= kMaxConstantDriftPpm)) {
                           throw std::invalid_argument("constant drift exceeds 1e4 ppm");
                       }
                   },
                   [](RandomWalkDrift w) {
                       if (w.step_interval <= Duration::zero()) {
                           throw std::invalid_argument("random walk step interval must be positive");
                       }
                       if (!(w.step_bound.value >= 0.0) || w.step_bound.value > kMaxConstantDriftPpm) {
                           throw std::invalid_argument("random walk step bound out of range");
                       }
                   },
               },
               drift);
}

double max_abs_drift_ppm(const DriftModel& drift) {
    return std::visit(overloaded{
                          [](NoDrift) { return 0.0; },
                          [](ConstantDrift c) { return std::abs(c.rate.value); },
                          [](RandomWalkDrift w) { return w.step_bound.value; },
                      },
                      drift);
}

std::string describe(const DriftModel& drift) {
    std::ostringstream out;
    std::visit(overloaded{
                   [&](NoDrift) { out << "none"; },
                   [&](ConstantDrift c) { out << "constant " << c.rate.value << " ppm"; },
                   [&](RandomWalkDrift w) {
                       out << "random walk +-" << w.step_bound.value << " ppm every "
                           << w.step_interval.count() << " ns";
                   },
               },
               drift);
    return out.str();
}

Oscillator::Oscillator(std::string node, DriftModel drift, RngStream rng, Duration initial_offset)
    : node_(std::move(node)), drift_(drift), rng_(std::move(rng)), initial_offset_(initial_offset) {
    validate(drift_);
    segments_.push_back(DriftSegment{SimTime{}, next_drift(), initial_offset_});
}

double Oscillator::next_drift() {
    return std::visit(overloaded{
                          [](NoDrift) { return 0.0; },
                          [](ConstantDrift c) { return c.rate.fraction(); },
                          [this](RandomWalkDrift w) {
                              const double bound = w.step_bound.fraction();
                              return rng_.draw_uniform(-bound, bound);
                          },
                      },
                      drift_);
}

std::size_t Oscillator::advance_drift(SimTime until) {
    const auto* walk = std::get_if<RandomWalkDrift>(&drift_);
    if (walk == nullptr) return segments_.size();
    while (segments_.back().start + walk->step_interval < until) {
        const auto& last = segments_.back();
        const SimTime start = last.start + walk->step_interval;
        const Duration local = last.local_at_start + walk->step_interval +
                               scaled(walk->step_interval, last.drift);
        segments_.push_back(DriftSegment{start, next_drift(), local});
    }
    return segments_.size();
}

const DriftSegment& Oscillator::segment_for(SimTime t) {
    advance_drift(t + Duration{1});
    // Segments are uniformly spaced for random walks; otherwise there is one.
    if (const auto* walk = std::get_if<RandomWalkDrift>(&drift_)) {
        const auto index = static_cast<std::size_t>(t.time_since_epoch() / walk->step_interval);
        return segments_[std::min(index, segments_.size() - 1)];
    }
    return segments_.front();
}

Duration Oscillator::local_time(SimTime t) {
    if (t < SimTime{}) throw std::out_of_range("local_time before simulation start");
    const auto& seg = segment_for(t);
    const Duration elapsed = t - seg.start;
    return seg.local_at_start + elapsed + scaled(elapsed, seg.drift);
}

double Oscillator::rate_at(SimTime t) { return segment_for(t).rate(); }

Duration AffineMap::apply(Duration local) const {
    const Duration elapsed = local - origin_local;
    if (rate_ratio == 1.0) return origin_domain + elapsed;
    return origin_domain + elapsed + scaled(elapsed, rate_ratio - 1.0);
}

Duration domain_time(const DomainClock& clock, Oscillator& osc, SimTime t) {
    return clock.offset_map.apply(osc.local_time(t));
}

ClockDiff clock_diff(const DomainClock& clock, Oscillator& osc, SimTime t) {
    return ClockDiff{t, domain_time(clock, osc, t) - t.time_since_epoch()};
}

SyncCorrection apply_sync_correction(DomainClock& clock, Oscillator& osc, SimTime now,
                                     Duration master_estimate, Duration at_local,
                                     double rate_ratio) {
    if (!(rate_ratio > 0.0)) throw std::invalid_argument("rate_ratio must be positive");
    SyncCorrection result;
    result.before = clock_diff(clock, osc, now);
    clock.offset_map = AffineMap{at_local, master_estimate, rate_ratio};
    result.after = clock_diff(clock, osc, now);
    return result;
}

}  // namespace gptpsim
