#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "wsnsync/timebase.hpp"

namespace wsnsync {

enum class SyncMode {
    packet_relaying,
    time_translating,
};

/// "relaying" / "ttg".
std::string_view to_string(SyncMode mode);
std::optional<SyncMode> parse_sync_mode(std::string_view text);

/// Master -> slave. origin_stamp is T1 in the issuing master's clock.
struct RequestBeacon {
    TimeStamp origin_stamp;
    friend bool operator==(const RequestBeacon&, const RequestBeacon&) = default;
};

/// Slave -> master, carrying one measurement.
struct ResponseBeacon {
    TimeStamp echo_t1;
    TimeStamp t2;           // paired request arrival, slave logical clock
    TimeStamp t3;           // response departure, slave logical clock
    TimeStamp payload_time; // measurement time in the sender's logical clock
    Duration pd_total{0};   // accumulated relay hold time (relaying only)
    friend bool operator==(const ResponseBeacon&, const ResponseBeacon&) = default;
};

struct ExchangeRecord {
    TimeStamp t1;
    TimeStamp t2;
    TimeStamp t3;
    TimeStamp t4;
    Duration pd_total{0};
};

/// The request a slave will pair its next response with.
struct RequestObservation {
    TimeStamp origin_stamp;     // T1
    TimeStamp arrival_hw;       // T2*
    TimeStamp arrival_logical;  // T2
};

/// Synchronization state a node keeps toward its master.
struct LayerSyncState {
    ScfrState scfr;
    std::optional<LogicalClockState> logical;
    std::optional<RequestObservation> last_request;
    /// When false the rate estimate is pinned to 1 (offset-only synchronization).
    bool frequency_sync = true;

    [[nodiscard]] bool has_request() const { return last_request.has_value(); }
    /// Rate currently applied by the logical clock.
    [[nodiscard]] double rate_hat() const { return logical ? logical->rate_hat : 1.0; }
};

/// ((t2 - t1) - (t4 - t3)) / 2, halves rounded toward zero.
Duration estimate_offset(const ExchangeRecord& rec);

TimeStamp compensate_processing_delay(TimeStamp t4, Duration pd_total);

TimeStamp estimate_measurement_time(TimeStamp payload_logical, Duration theta_hat);

/// Slave-side half of the layer translation: maps a time on this node's
/// hardware clock onto its logical clock anchored at the last request arrival,
/// (t - T2*) / R + T2. nullopt if no request has been received yet.
std::optional<TimeStamp> translate_up(TimeStamp t_lower_hw, const LayerSyncState& sync);

/// Records a request: SCFR pair, logical-clock rebase at the arrival, and the
/// (T1, T2*, T2) triple for the next response. Throws PreconditionError for an
/// out-of-order beacon.
LayerSyncState sensor_on_request(const LayerSyncState& state, const RequestBeacon& beacon, TimeStamp arrival_hw);

/// Builds the response for a measurement taken at hardware time `hw_now`,
/// sent immediately. nullopt if no request has been received yet.
std::optional<ResponseBeacon> sensor_on_measurement(const LayerSyncState& state, TimeStamp hw_now);

RequestBeacon gateway_relay_on_request(const RequestBeacon& beacon);

/// Adds the hold time, as measured on the gateway's own hardware clock.
ResponseBeacon gateway_relay_on_response(const ResponseBeacon& resp, Duration hold_hw);

/// Master-side layer estimate: payload minus this layer's offset estimate.
/// The record must hold this layer's own exchange timestamps.
TimeStamp ttg_master_on_response(const ExchangeRecord& rec, TimeStamp payload_logical);

/// Response a time-translating gateway sends upward at hardware time `hw_now`
/// for a measurement it has estimated as `lower_estimate_hw` on its own
/// hardware clock. nullopt if this layer has not received a request yet.
std::optional<ResponseBeacon> ttg_gateway_respond(const LayerSyncState& state, TimeStamp lower_estimate_hw,
                                                  TimeStamp hw_now);

/// Canonical one-line dumps used by golden traces: mode|layer|type|fields in ps.
std::string dump_message(SyncMode mode, int layer, const RequestBeacon& beacon);
std::string dump_message(SyncMode mode, int layer, const ResponseBeacon& resp);

} // namespace wsnsync
