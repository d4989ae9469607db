#include "wsnsync/protocol.hpp"

#include <sstream>

#include "wsnsync/errors.hpp"

namespace wsnsync {

std::string_view to_string(SyncMode mode) {
    switch (mode) {
    case SyncMode::packet_relaying: return "relaying";
    case SyncMode::time_translating: return "ttg";
    }
    return "unknown";
}

std::optional<SyncMode> parse_sync_mode(std::string_view text) {
    if (text == "relaying" || text == "packet_relaying")
        return SyncMode::packet_relaying;
    if (text == "ttg" || text == "time_translating")
        return SyncMode::time_translating;
    return std::nullopt;
}

Duration estimate_offset(const ExchangeRecord& rec) {
    const Duration twice = (rec.t2 - rec.t1) - (rec.t4 - rec.t3);
    return Duration{twice.count() / 2};
}

TimeStamp compensate_processing_delay(TimeStamp t4, Duration pd_total) {
    if (pd_total < Duration{0})
        throw PreconditionError("processing delay must be non-negative");
    return t4 - pd_total;
}

TimeStamp estimate_measurement_time(TimeStamp payload_logical, Duration theta_hat) {
    return payload_logical - theta_hat;
}

std::optional<TimeStamp> translate_up(TimeStamp t_lower_hw, const LayerSyncState& sync) {
    if (!sync.last_request)
        return std::nullopt;
    const RequestObservation& req = *sync.last_request;
    // May be negative: the lower layer's estimate can precede this layer's last request.
    return req.arrival_logical + divide_duration(t_lower_hw - req.arrival_hw, sync.rate_hat());
}

LayerSyncState sensor_on_request(const LayerSyncState& state, const RequestBeacon& beacon, TimeStamp arrival_hw) {
    if (state.last_request && arrival_hw < state.last_request->arrival_hw)
        throw PreconditionError("request arrival precedes the previous one");

    LayerSyncState next = state;
    next.scfr = scfr_update(state.scfr, beacon.origin_stamp, arrival_hw);
    const double rate = state.frequency_sync ? scfr_ratio(next.scfr).value_or(1.0) : 1.0;
    next.logical = state.logical ? logical_rebase(*state.logical, arrival_hw, rate)
                                 : LogicalClockState{arrival_hw, arrival_hw, rate};
    next.last_request = RequestObservation{
        .origin_stamp = beacon.origin_stamp,
        .arrival_hw = arrival_hw,
        .arrival_logical = next.logical->anchor_logical,
    };
    return next;
}

std::optional<ResponseBeacon> sensor_on_measurement(const LayerSyncState& state, TimeStamp hw_now) {
    if (!state.last_request || !state.logical)
        return std::nullopt;
    const TimeStamp t3 = logical_read(*state.logical, hw_now);
    return ResponseBeacon{
        .echo_t1 = state.last_request->origin_stamp,
        .t2 = state.last_request->arrival_logical,
        .t3 = t3,
        .payload_time = t3,
        .pd_total = Duration{0},
    };
}

RequestBeacon gateway_relay_on_request(const RequestBeacon& beacon) {
    return beacon;
}

ResponseBeacon gateway_relay_on_response(const ResponseBeacon& resp, Duration hold_hw) {
    if (hold_hw < Duration{0})
        throw PreconditionError("gateway hold time must be non-negative");
    ResponseBeacon out = resp;
    out.pd_total += hold_hw;
    return out;
}

TimeStamp ttg_master_on_response(const ExchangeRecord& rec, TimeStamp payload_logical) {
    return estimate_measurement_time(payload_logical, estimate_offset(rec));
}

std::optional<ResponseBeacon> ttg_gateway_respond(const LayerSyncState& state, TimeStamp lower_estimate_hw,
                                                  TimeStamp hw_now) {
    const auto payload = translate_up(lower_estimate_hw, state);
    if (!payload || !state.logical)
        return std::nullopt;
    return ResponseBeacon{
        .echo_t1 = state.last_request->origin_stamp,
        .t2 = state.last_request->arrival_logical,
        .t3 = logical_read(*state.logical, hw_now),
        .payload_time = *payload,
        .pd_total = Duration{0},
    };
}

std::string dump_message(SyncMode mode, int layer, const RequestBeacon& beacon) {
    std::ostringstream os;
    os << to_string(mode) << '|' << layer << "|request|t1=" << beacon.origin_stamp.ps();
    return os.str();
}

std::string dump_message(SyncMode mode, int layer, const ResponseBeacon& resp) {
    std::ostringstream os;
    os << to_string(mode) << '|' << layer << "|response|t1=" << resp.echo_t1.ps() << "|t2=" << resp.t2.ps()
       << "|t3=" << resp.t3.ps() << "|payload=" << resp.payload_time.ps() << "|pd=" << resp.pd_total.count();
    return os.str();
}

} // namespace wsnsync
