#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "wsnsync/protocol.hpp"
#include "wsnsync/rng.hpp"
#include "wsnsync/timebase.hpp"

namespace wsnsync {

/// Gateway hold time between receiving a response and forwarding it upward,
/// in reference-time seconds.
struct ProcessingDelay {
    enum class Kind { zero, constant, exponential };
    Kind kind = Kind::zero;
    double seconds = 0.0;  // constant value or exponential mean

    /// Parses "zero", "const:X" or "exp:X". Throws ConfigError.
    static ProcessingDelay parse(std::string_view text);
    [[nodiscard]] std::string to_string() const;
    friend bool operator==(const ProcessingDelay&, const ProcessingDelay&) = default;
};

enum class RequestSchedule {
    poisson,
    periodic,  // experimental: fixed interval, random phase
};

struct Scenario {
    int num_layers = 1;
    double duration_s = 3600.0;
    int n_measurements = 100;
    SyncMode mode = SyncMode::packet_relaying;
    double link_distance_m = 100.0;
    double propagation_speed_mps = 3e8;
    double jitter_std_s = 1e-9;
    ProcessingDelay gateway_pd{};
    double request_mean_interval_s = 10.0;
    double skew_bound_ppm = 100.0;
    double offset_bound_s = 1.0;
    std::uint64_t seed = 1;

    /// Subtract the accumulated relay hold time from T4 at the head.
    bool compensate_pd = true;
    /// When false every logical clock runs at rate 1 (no SCFR correction).
    bool frequency_sync = true;
    RequestSchedule request_schedule = RequestSchedule::poisson;
    /// Minimum SCFR observation span (first to latest request departure) a node
    /// needs before measurements it handles count toward the MSE.
    double warmup_window_s = 100.0;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

struct Topology {
    std::vector<ClockParams> layer_params;  // index k-1 holds layer k (node k against node k-1)
    std::vector<EffectiveClock> clocks;     // node 0 is the head, node L the sensor
    Duration propagation{0};

    [[nodiscard]] int num_layers() const { return static_cast<int>(layer_params.size()); }
};

/// distance / speed rounded to the nearest picosecond.
Duration propagation_delay(double distance_m, double speed_mps);

/// Head clock is the identity; node k composes layer k's sampled parameters
/// onto node k-1. Layer k draws from its own substream, so a shorter chain is
/// a prefix of a longer one with the same seed.
Topology build_chain(const Scenario& scenario, const SeedTree& seeds);

/// Poisson process on [0, duration] conditioned on exactly n arrivals.
std::vector<TimeStamp> sample_measurement_times(Rng& rng, int n, Duration duration);

/// Propagation plus zero-mean normal jitter, redrawn until the total is positive.
class LinkDelayModel {
public:
    LinkDelayModel(Duration propagation, double jitter_std_s)
        : propagation_(propagation), jitter_std_s_(jitter_std_s) {}

    template <class Urbg>
    Duration sample(Urbg& rng) const {
        if (jitter_std_s_ == 0.0)
            return propagation_;
        std::normal_distribution<double> normal(0.0, 1.0);
        for (;;) {
            const Duration jitter = duration_from_seconds(jitter_std_s_ * normal(rng));
            const Duration total = propagation_ + jitter;
            if (total > Duration{0})
                return total;
        }
    }

    [[nodiscard]] Duration propagation() const { return propagation_; }
    [[nodiscard]] double jitter_std_s() const { return jitter_std_s_; }

private:
    Duration propagation_;
    double jitter_std_s_;
};

/// Request emission times in reference time, one stream per requesting master.
/// Relaying: a single stream at the head. Time-translating: stream k-1 belongs
/// to the master of layer k. Stream k-1 always draws from the layer-k
/// substream, so the head's stream is shared between modes.
std::vector<std::vector<TimeStamp>> schedule_requests(const Scenario& scenario, const SeedTree& seeds);

/// Reference time at which `node` read `hw` on its hardware clock.
TimeStamp ground_truth(const Topology& topology, int node, TimeStamp hw);

enum class RecordStatus {
    used,
    excluded_warmup,      // some node on the path had an immature SCFR estimate
    excluded_no_request,  // some node on the path had not yet heard from its master
};

std::string_view to_string(RecordStatus status);

struct MeasurementRecord {
    int index = 0;
    TimeStamp t_true;
    std::optional<TimeStamp> t_est;  // present whenever the estimate could be formed
    RecordStatus status = RecordStatus::excluded_no_request;
    /// Jitter (delay minus propagation) of the paired request hop, per layer 1..L.
    std::vector<Duration> down_jitter;
    /// Jitter of the response hop, per layer 1..L.
    std::vector<Duration> up_jitter;

    [[nodiscard]] bool used() const { return status == RecordStatus::used; }
    /// t_est - t_true, if an estimate exists.
    [[nodiscard]] std::optional<Duration> error() const {
        if (!t_est)
            return std::nullopt;
        return *t_est - t_true;
    }
};

struct RunDiagnostics {
    std::uint64_t events_dispatched = 0;
    std::uint64_t requests_emitted = 0;
    std::uint64_t requests_rejected = 0;  // out-of-order arrivals dropped by a slave
};

struct RunResult {
    Topology topology;
    std::vector<MeasurementRecord> records;  // ordered by measurement index
    std::vector<std::string> trace;          // empty unless requested
    RunDiagnostics diagnostics;
};

struct RunOptions {
    bool capture_trace = false;
};

/// Executes one scenario until every in-flight message has been delivered.
/// Deterministic in the scenario (including its seed).
RunResult run(const Scenario& scenario, const RunOptions& options = {});

/// Writes trace lines `time_ps|seq|kind|node|fields...`, one per event.
void write_trace(const RunResult& result, std::ostream& out);

} // namespace wsnsync
