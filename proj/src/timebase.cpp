#include "wsnsync/timebase.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "wsnsync/errors.hpp"

namespace wsnsync {

Duration duration_from_seconds(double seconds) {
    return Duration{std::llroundl(static_cast<long double>(seconds) * 1e12L)};
}

double to_seconds(Duration d) {
    return static_cast<double>(static_cast<long double>(d.count()) * 1e-12L);
}

Duration divide_duration(Duration d, long double divisor) {
    return Duration{std::llroundl(static_cast<long double>(d.count()) / divisor)};
}

EffectiveClock::EffectiveClock(double ratio, double offset_s)
    : skew_(static_cast<long double>(ratio) - 1.0L),
      offset_ps_(static_cast<long double>(offset_s) * 1e12L) {
    if (!(ratio > 0.0))
        throw PreconditionError("clock ratio must be positive, got " + std::to_string(ratio));
}

double truncated_standard_normal(Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        const double z = normal(rng);
        if (std::abs(z) <= 3.0)
            return z;
    }
}

ClockParams sample_clock_params(Rng& rng, double skew_bound_ppm, double offset_bound_s) {
    if (!(skew_bound_ppm > 0.0) || !std::isfinite(skew_bound_ppm))
        throw ConfigError("skew bound must be positive, got " + std::to_string(skew_bound_ppm) + " ppm");
    if (!(offset_bound_s > 0.0) || !std::isfinite(offset_bound_s))
        throw ConfigError("offset bound must be positive, got " + std::to_string(offset_bound_s) + " s");

    // Acceptance is decided on the standard normal, so scaling either bound
    // scales the drawn value exactly and consumes the same draws.
    const double z_ratio = truncated_standard_normal(rng);
    const double z_offset = truncated_standard_normal(rng);
    return ClockParams{
        .ratio = 1.0 + z_ratio * (skew_bound_ppm / 3.0) * 1e-6,
        .offset_s = z_offset * (offset_bound_s / 3.0),
    };
}

EffectiveClock compose_clock(const EffectiveClock& parent, const ClockParams& rel) {
    if (!(rel.ratio > 0.0))
        throw PreconditionError("relative clock ratio must be positive");
    const long double rel_skew = static_cast<long double>(rel.ratio) - 1.0L;
    EffectiveClock out;
    // (1 + a)(1 + b) - 1, kept in skew form to avoid cancellation.
    out.skew_ = rel_skew + parent.skew_ + rel_skew * parent.skew_;
    out.offset_ps_ = parent.offset_ps_ + rel_skew * parent.offset_ps_
                     + static_cast<long double>(rel.offset_s) * 1e12L;
    return out;
}

TimeStamp hw_read(const EffectiveClock& clock, TimeStamp t_ref) {
    const long double t = static_cast<long double>(t_ref.ps());
    return TimeStamp::from_ps(t_ref.ps() + std::llroundl(clock.skew() * t + clock.offset_ps()));
}

TimeStamp hw_invert(const EffectiveClock& clock, TimeStamp hw) {
    const long double x = static_cast<long double>(hw.ps()) - clock.offset_ps();
    // x / (1 + s) written as x - x*s/(1 + s).
    const long double correction = x * clock.skew() / (1.0L + clock.skew());
    const std::int64_t guess = hw.ps() + std::llroundl(-clock.offset_ps() - correction);

    std::int64_t best = guess;
    std::int64_t best_err = std::llabs((hw_read(clock, TimeStamp::from_ps(guess)) - hw).count());
    for (std::int64_t cand : {guess - 1, guess + 1}) {
        const std::int64_t err = std::llabs((hw_read(clock, TimeStamp::from_ps(cand)) - hw).count());
        if (err < best_err) {
            best = cand;
            best_err = err;
        }
    }
    return TimeStamp::from_ps(best);
}

ScfrState scfr_update(const ScfrState& state, TimeStamp departure, TimeStamp arrival_hw) {
    if (state.last && departure <= state.last->departure) {
        throw PreconditionError("SCFR beacon out of order: departure " + std::to_string(departure.ps())
                                + " ps does not follow " + std::to_string(state.last->departure.ps()) + " ps");
    }
    ScfrState next = state;
    const BeaconPair pair{departure, arrival_hw};
    if (!next.first)
        next.first = pair;
    next.last = pair;
    ++next.pair_count;
    return next;
}

std::optional<double> scfr_ratio(const ScfrState& state) {
    if (state.pair_count < 2 || !state.first || !state.last)
        return std::nullopt;
    const Duration span = state.last->departure - state.first->departure;
    if (span.count() == 0)
        return std::nullopt;
    const Duration local = state.last->arrival_hw - state.first->arrival_hw;
    return static_cast<double>(static_cast<long double>(local.count()) / static_cast<long double>(span.count()));
}

Duration scfr_window(const ScfrState& state) {
    if (state.pair_count < 2)
        return Duration{0};
    return state.last->departure - state.first->departure;
}

TimeStamp logical_read(const LogicalClockState& state, TimeStamp hw) {
    if (hw < state.anchor_hw)
        throw PreconditionError("logical clock read before its anchor");
    return state.anchor_logical + divide_duration(hw - state.anchor_hw, state.rate_hat);
}

LogicalClockState logical_rebase(const LogicalClockState& state, TimeStamp new_anchor_hw, double new_rate) {
    if (!(new_rate > 0.0))
        throw PreconditionError("logical clock rate must be positive");
    return LogicalClockState{
        .anchor_hw = new_anchor_hw,
        .anchor_logical = logical_read(state, new_anchor_hw),
        .rate_hat = new_rate,
    };
}

} // namespace wsnsync
