#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ratio>

#include "wsnsync/rng.hpp"

namespace wsnsync {

/// Signed picosecond interval.
using Duration = std::chrono::duration<std::int64_t, std::pico>;

/// Converts seconds to picoseconds, rounding half away from zero.
Duration duration_from_seconds(double seconds);
double to_seconds(Duration d);

/// Scales `d` by 1/divisor and rounds half away from zero to the nearest picosecond.
Duration divide_duration(Duration d, long double divisor);

/// A point on some node's time axis, counted in picoseconds from simulation
/// start. Reference time, hardware readings and logical readings all share this
/// type; which clock a value lives on is fixed by where it was produced.
class TimeStamp {
public:
    constexpr TimeStamp() = default;
    constexpr explicit TimeStamp(Duration since_start) : since_start_(since_start) {}

    static constexpr TimeStamp from_ps(std::int64_t ps) { return TimeStamp{Duration{ps}}; }
    static TimeStamp from_seconds(double seconds) { return TimeStamp{duration_from_seconds(seconds)}; }

    [[nodiscard]] constexpr std::int64_t ps() const { return since_start_.count(); }
    [[nodiscard]] constexpr Duration since_start() const { return since_start_; }
    [[nodiscard]] double seconds() const { return to_seconds(since_start_); }

    constexpr TimeStamp& operator+=(Duration d) { since_start_ += d; return *this; }
    constexpr TimeStamp& operator-=(Duration d) { since_start_ -= d; return *this; }

    friend constexpr TimeStamp operator+(TimeStamp t, Duration d) { return t += d; }
    friend constexpr TimeStamp operator+(Duration d, TimeStamp t) { return t += d; }
    friend constexpr TimeStamp operator-(TimeStamp t, Duration d) { return t -= d; }
    friend constexpr Duration operator-(TimeStamp a, TimeStamp b) { return a.since_start_ - b.since_start_; }

    friend constexpr auto operator<=>(const TimeStamp&, const TimeStamp&) = default;

private:
    Duration since_start_{0};
};

/// Relative clock of a slave against its master: T_slave = ratio * T_master + offset.
struct ClockParams {
    double ratio = 1.0;
    double offset_s = 0.0;
};

/// A node's hardware clock expressed directly against the reference clock.
///
/// Stored as (ratio - 1, offset in ps) in extended precision so that
/// evaluating it over an hour-long horizon stays well inside 1 ps.
class EffectiveClock {
public:
    EffectiveClock() = default;
    EffectiveClock(double ratio, double offset_s);

    static EffectiveClock identity() { return EffectiveClock{}; }

    [[nodiscard]] double ratio() const { return static_cast<double>(1.0L + skew_); }
    [[nodiscard]] double offset_s() const { return static_cast<double>(offset_ps_ * 1e-12L); }
    [[nodiscard]] long double skew() const { return skew_; }
    [[nodiscard]] long double offset_ps() const { return offset_ps_; }

private:
    friend EffectiveClock compose_clock(const EffectiveClock&, const ClockParams&);

    long double skew_ = 0.0L;
    long double offset_ps_ = 0.0L;
};

/// Draws per-layer clock parameters from normals truncated at 3 sigma:
/// ratio around 1 with sigma = skew_bound_ppm/3 ppm, offset around 0 with
/// sigma = offset_bound_s/3. Throws ConfigError for non-positive bounds.
ClockParams sample_clock_params(Rng& rng, double skew_bound_ppm, double offset_bound_s);

/// Standard normal rejection-sampled into [-3, 3]; the building block of
/// sample_clock_params.
double truncated_standard_normal(Rng& rng);

EffectiveClock compose_clock(const EffectiveClock& parent, const ClockParams& rel);

/// Hardware reading of `clock` at reference time `t_ref`.
TimeStamp hw_read(const EffectiveClock& clock, TimeStamp t_ref);

/// Reference time at which `clock` reads `hw`; hw_read of the result is within 1 ps of `hw`.
TimeStamp hw_invert(const EffectiveClock& clock, TimeStamp hw);

/// One received time-stamped beacon: departure in the master's clock, arrival in ours.
struct BeaconPair {
    TimeStamp departure;
    TimeStamp arrival_hw;
    friend bool operator==(const BeaconPair&, const BeaconPair&) = default;
};

/// Source clock frequency recovery accumulator (first and most recent pair).
struct ScfrState {
    std::optional<BeaconPair> first;
    std::optional<BeaconPair> last;
    std::size_t pair_count = 0;
    friend bool operator==(const ScfrState&, const ScfrState&) = default;
};

/// Appends a pair. Throws PreconditionError if `departure` does not strictly
/// follow the previous one; the input state is never modified.
ScfrState scfr_update(const ScfrState& state, TimeStamp departure, TimeStamp arrival_hw);

/// Cumulative-ratio estimate of the local rate against the master clock, or
/// nullopt until two pairs are available.
std::optional<double> scfr_ratio(const ScfrState& state);

/// Departure span between the first and most recent pair (zero before two pairs).
Duration scfr_window(const ScfrState& state);

/// Piecewise-linear, frequency-corrected clock; the offset correction is always zero.
struct LogicalClockState {
    TimeStamp anchor_hw;
    TimeStamp anchor_logical;
    double rate_hat = 1.0;
    friend bool operator==(const LogicalClockState&, const LogicalClockState&) = default;
};

/// anchor_logical + (hw - anchor_hw) / rate_hat. Requires hw >= anchor_hw.
TimeStamp logical_read(const LogicalClockState& state, TimeStamp hw);

/// Starts a new segment at `new_anchor_hw` with `new_rate`, keeping logical time continuous.
LogicalClockState logical_rebase(const LogicalClockState& state, TimeStamp new_anchor_hw, double new_rate);

} // namespace wsnsync
