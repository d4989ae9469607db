#include "wsnsync/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "wsnsync/errors.hpp"
#include "wsnsync/event_queue.hpp"

namespace wsnsync {

namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok)
        throw ConfigError("invalid scenario field '" + field + "': " + rule);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }
bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

} // namespace

ProcessingDelay ProcessingDelay::parse(std::string_view text) {
    if (text == "zero" || text == "0")
        return {};
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw ConfigError("processing delay must be zero, const:X or exp:X, got '" + std::string(text) + "'");
    const std::string_view kind = text.substr(0, colon);
    const std::string value(text.substr(colon + 1));
    double seconds = 0.0;
    try {
        std::size_t used = 0;
        seconds = std::stod(value, &used);
        if (used != value.size())
            throw std::invalid_argument(value);
    } catch (const std::exception&) {
        throw ConfigError("processing delay value is not a number: '" + value + "'");
    }
    if (!finite_non_negative(seconds))
        throw ConfigError("processing delay must be non-negative, got '" + value + "'");
    if (kind == "const")
        return {Kind::constant, seconds};
    if (kind == "exp")
        return {Kind::exponential, seconds};
    throw ConfigError("unknown processing delay kind '" + std::string(kind) + "'");
}

std::string ProcessingDelay::to_string() const {
    std::ostringstream os;
    switch (kind) {
    case Kind::zero: return "zero";
    case Kind::constant: os << "const:" << seconds; break;
    case Kind::exponential: os << "exp:" << seconds; break;
    }
    return os.str();
}

void Scenario::validate() const {
    require(num_layers >= 1 && num_layers <= 64, "num_layers", "must be in [1, 64]");
    require(finite_positive(duration_s), "duration_s", "must be positive");
    require(n_measurements >= 0, "n_measurements", "must be non-negative");
    require(finite_positive(link_distance_m), "link_distance_m", "must be positive");
    require(finite_positive(propagation_speed_mps), "propagation_speed_mps", "must be positive");
    require(finite_non_negative(jitter_std_s), "jitter_std_s", "must be non-negative");
    require(finite_non_negative(gateway_pd.seconds), "gateway_pd", "must be non-negative");
    require(finite_positive(request_mean_interval_s), "request_mean_interval_s", "must be positive");
    require(finite_non_negative(skew_bound_ppm) && skew_bound_ppm < 1e6, "skew_bound_ppm",
            "must be in [0, 1e6)");
    require(finite_non_negative(offset_bound_s), "offset_bound_s", "must be non-negative");
    require(finite_non_negative(warmup_window_s), "warmup_window_s", "must be non-negative");
    // Keeps every timestamp, offsets included, far inside the int64 ps range.
    require(duration_s + offset_bound_s * num_layers < 1e6, "duration_s", "horizon exceeds 1e6 s");
}

Duration propagation_delay(double distance_m, double speed_mps) {
    return duration_from_seconds(distance_m / speed_mps);
}

Topology build_chain(const Scenario& scenario, const SeedTree& seeds) {
    Topology topo;
    topo.propagation = propagation_delay(scenario.link_distance_m, scenario.propagation_speed_mps);
    topo.clocks.push_back(EffectiveClock::identity());
    for (int layer = 1; layer <= scenario.num_layers; ++layer) {
        Rng rng = seeds.stream(StreamTag::clock, {static_cast<std::uint64_t>(layer)});
        ClockParams params;
        if (scenario.skew_bound_ppm > 0.0 && scenario.offset_bound_s > 0.0) {
            params = sample_clock_params(rng, scenario.skew_bound_ppm, scenario.offset_bound_s);
        } else {
            // A zero bound pins that parameter; draw order matches sample_clock_params.
            if (scenario.skew_bound_ppm > 0.0)
                params.ratio = 1.0 + truncated_standard_normal(rng) * (scenario.skew_bound_ppm / 3.0) * 1e-6;
            if (scenario.offset_bound_s > 0.0)
                params.offset_s = truncated_standard_normal(rng) * (scenario.offset_bound_s / 3.0);
        }
        topo.layer_params.push_back(params);
        topo.clocks.push_back(compose_clock(topo.clocks.back(), params));
    }
    return topo;
}

std::vector<TimeStamp> sample_measurement_times(Rng& rng, int n, Duration duration) {
    if (n < 0)
        throw PreconditionError("measurement count must be non-negative");
    std::uniform_int_distribution<std::int64_t> uniform(0, duration.count());
    std::vector<TimeStamp> times;
    times.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        times.push_back(TimeStamp::from_ps(uniform(rng)));
    std::sort(times.begin(), times.end());
    return times;
}

std::vector<std::vector<TimeStamp>> schedule_requests(const Scenario& scenario, const SeedTree& seeds) {
    const int streams = scenario.mode == SyncMode::packet_relaying ? 1 : scenario.num_layers;
    const Duration horizon = duration_from_seconds(scenario.duration_s);
    const Duration interval = duration_from_seconds(scenario.request_mean_interval_s);

    std::vector<std::vector<TimeStamp>> out;
    out.reserve(static_cast<std::size_t>(streams));
    for (int s = 0; s < streams; ++s) {
        Rng rng = seeds.stream(StreamTag::request, {static_cast<std::uint64_t>(s + 1)});
        std::vector<TimeStamp> times;
        TimeStamp t;
        if (scenario.request_schedule == RequestSchedule::periodic) {
            std::uniform_int_distribution<std::int64_t> phase(1, interval.count());
            for (t = TimeStamp::from_ps(phase(rng)); t.since_start() <= horizon; t += interval)
                times.push_back(t);
        } else {
            std::exponential_distribution<double> gap(1.0 / scenario.request_mean_interval_s);
            for (;;) {
                TimeStamp next = t + duration_from_seconds(gap(rng));
                if (!times.empty() && next <= times.back())
                    next = times.back() + Duration{1};
                if (next.since_start() > horizon)
                    break;
                times.push_back(next);
                t = next;
            }
        }
        out.push_back(std::move(times));
    }
    return out;
}

TimeStamp ground_truth(const Topology& topology, int node, TimeStamp hw) {
    return hw_invert(topology.clocks.at(static_cast<std::size_t>(node)), hw);
}

std::string_view to_string(RecordStatus status) {
    switch (status) {
    case RecordStatus::used: return "used";
    case RecordStatus::excluded_warmup: return "excluded_warmup";
    case RecordStatus::excluded_no_request: return "excluded_no_request";
    }
    return "unknown";
}

namespace {

enum class Direction : std::uint64_t { down = 0, up = 1 };

/// A beacon on the air plus the simulator's bookkeeping, which nodes never read.
struct Envelope {
    std::variant<RequestBeacon, ResponseBeacon> beacon;
    int layer = 0;            // link the message travels on
    std::uint64_t index = 0;  // request index in its stream, or measurement index
    bool warm = true;
    std::vector<Duration> down_jitter{};
    std::vector<Duration> up_jitter{};
    TimeStamp sent_at{};
    Duration delay{0};
};

struct EmitRequest {
    int stream;
    std::uint64_t index;
};
struct Deliver {
    int node;
    Envelope msg;
};
struct Measure {
    int index;
};
struct Forward {
    int node;
    Envelope msg;
    Duration hold_hw{0};  // relaying: hold on the gateway's own clock
    TimeStamp estimate;   // time-translating: this node's estimate on its hardware clock
};

using Payload = std::variant<EmitRequest, Deliver, Measure, Forward>;

struct NodeState {
    LayerSyncState sync;
    std::vector<Duration> request_jitter;  // jitter of the last accepted request, per layer
    std::uint64_t request_index = 0;
};

class Simulation {
public:
    Simulation(const Scenario& scenario, const RunOptions& options)
        : sc_(scenario),
          opts_(options),
          seeds_(scenario.seed),
          layers_(scenario.num_layers),
          warmup_(duration_from_seconds(scenario.warmup_window_s)) {}

    RunResult execute() {
        RunResult result;
        result.topology = build_chain(sc_, seeds_);
        topo_ = &result.topology;
        links_.emplace(topo_->propagation, sc_.jitter_std_s);

        nodes_.assign(static_cast<std::size_t>(layers_ + 1), NodeState{});
        for (auto& n : nodes_)
            n.sync.frequency_sync = sc_.frequency_sync;

        requests_ = schedule_requests(sc_, seeds_);
        for (std::size_t s = 0; s < requests_.size(); ++s)
            for (std::size_t j = 0; j < requests_[s].size(); ++j)
                queue_.push(requests_[s][j], EmitRequest{static_cast<int>(s), j});

        Rng mrng = seeds_.stream(StreamTag::measurement);
        const auto times = sample_measurement_times(mrng, sc_.n_measurements, duration_from_seconds(sc_.duration_s));
        records_.resize(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            records_[i].index = static_cast<int>(i);
            records_[i].t_true = times[i];
            records_[i].down_jitter.assign(static_cast<std::size_t>(layers_), Duration{0});
            records_[i].up_jitter.assign(static_cast<std::size_t>(layers_), Duration{0});
            queue_.push(times[i], Measure{static_cast<int>(i)});
        }

        while (!queue_.empty()) {
            auto entry = queue_.pop();
            if (entry.time < now_)
                throw std::logic_error("event queue dispatched out of time order");
            now_ = entry.time;
            seq_ = entry.sequence;
            ++diag_.events_dispatched;
            std::visit([this](auto& ev) { handle(ev); }, entry.payload);
        }

        result.records = std::move(records_);
        result.trace = std::move(trace_);
        result.diagnostics = diag_;
        return result;
    }

private:
    const Scenario& sc_;
    const RunOptions& opts_;
    SeedTree seeds_;
    int layers_;
    Duration warmup_;
    const Topology* topo_ = nullptr;
    std::optional<LinkDelayModel> links_;
    std::vector<NodeState> nodes_;
    std::vector<std::vector<TimeStamp>> requests_;
    std::vector<MeasurementRecord> records_;
    std::vector<std::string> trace_;
    RunDiagnostics diag_;
    EventQueue<Payload> queue_;
    TimeStamp now_;
    std::uint64_t seq_ = 0;

    bool relaying() const { return sc_.mode == SyncMode::packet_relaying; }

    const EffectiveClock& clock(int node) const { return topo_->clocks[static_cast<std::size_t>(node)]; }
    TimeStamp hw(int node, TimeStamp t) const { return hw_read(clock(node), t); }

    bool warm(const LayerSyncState& sync) const {
        return sync.scfr.pair_count >= 2 && scfr_window(sync.scfr) >= warmup_;
    }

    void trace(int node, std::string_view kind, const std::string& fields) {
        if (!opts_.capture_trace)
            return;
        std::ostringstream os;
        os << now_.ps() << '|' << seq_ << '|' << kind << '|' << node << '|' << fields;
        trace_.push_back(os.str());
    }

    /// Puts `msg` on link `layer` toward `to`. The jitter draw is keyed by
    /// (layer, direction, index), independent of mode and event order.
    void transmit(Envelope msg, int to, Direction dir) {
        auto rng = seeds_.keyed(StreamTag::link_jitter, {static_cast<std::uint64_t>(msg.layer),
                                                         static_cast<std::uint64_t>(dir), msg.index});
        const Duration delay = links_->sample(rng);
        const Duration jitter = delay - links_->propagation();
        auto slot = static_cast<std::size_t>(msg.layer - 1);
        if (dir == Direction::down)
            msg.down_jitter[slot] = jitter;
        else
            msg.up_jitter[slot] = jitter;
        msg.sent_at = now_;
        msg.delay = delay;
        queue_.push(now_ + delay, Deliver{to, std::move(msg)});
    }

    Duration sample_hold(int node, std::uint64_t measurement) const {
        switch (sc_.gateway_pd.kind) {
        case ProcessingDelay::Kind::zero: return Duration{0};
        case ProcessingDelay::Kind::constant: return duration_from_seconds(sc_.gateway_pd.seconds);
        case ProcessingDelay::Kind::exponential: {
            if (sc_.gateway_pd.seconds == 0.0)
                return Duration{0};
            auto rng = seeds_.keyed(StreamTag::processing_delay, {static_cast<std::uint64_t>(node), measurement});
            std::exponential_distribution<double> dist(1.0 / sc_.gateway_pd.seconds);
            return duration_from_seconds(dist(rng));
        }
        }
        return Duration{0};
    }

    void handle(const EmitRequest& ev) {
        const int master = ev.stream;
        const RequestBeacon beacon{hw(master, now_)};
        ++diag_.requests_emitted;
        Envelope msg{.beacon = beacon, .layer = master + 1, .index = ev.index};
        msg.down_jitter.assign(static_cast<std::size_t>(layers_), Duration{0});
        msg.up_jitter.assign(static_cast<std::size_t>(layers_), Duration{0});
        trace(master, "emit_request", dump_message(sc_.mode, msg.layer, beacon) + "|index=" + std::to_string(ev.index));
        transmit(std::move(msg), master + 1, Direction::down);
    }

    void handle(Deliver& ev) {
        if (ev.msg.sent_at + ev.msg.delay != now_ || ev.msg.delay <= Duration{0})
            throw std::logic_error("message delivered before it was sent");
        if (std::holds_alternative<RequestBeacon>(ev.msg.beacon))
            on_request(ev.node, std::move(ev.msg));
        else
            on_response(ev.node, std::move(ev.msg));
    }

    std::string delivery_fields(const Envelope& msg) const {
        std::ostringstream os;
        std::visit([&](const auto& b) { os << dump_message(sc_.mode, msg.layer, b); }, msg.beacon);
        os << "|index=" << msg.index << "|sent=" << msg.sent_at.ps() << "|delay=" << msg.delay.count();
        return os.str();
    }

    void on_request(int node, Envelope msg) {
        trace(node, "deliver_message", delivery_fields(msg));
        const auto& beacon = std::get<RequestBeacon>(msg.beacon);

        if (relaying() && node < layers_) {
            msg.beacon = gateway_relay_on_request(beacon);
            msg.layer = node + 1;
            transmit(std::move(msg), node + 1, Direction::down);
            return;
        }

        NodeState& st = nodes_[static_cast<std::size_t>(node)];
        try {
            st.sync = sensor_on_request(st.sync, beacon, hw(node, now_));
        } catch (const PreconditionError& e) {
            ++diag_.requests_rejected;
            trace(node, "reject_request", e.what());
            return;
        }
        st.request_jitter = std::move(msg.down_jitter);
        st.request_index = msg.index;
    }

    void handle(const Measure& ev) {
        const int sensor = layers_;
        const TimeStamp hw_now = hw(sensor, now_);
        const NodeState& st = nodes_[static_cast<std::size_t>(sensor)];
        const auto resp = sensor_on_measurement(st.sync, hw_now);
        trace(sensor, "measurement",
              "index=" + std::to_string(ev.index) + "|hw=" + std::to_string(hw_now.ps()) + (resp ? "" : "|no_request"));
        if (!resp)
            return;

        Envelope msg{.beacon = *resp, .layer = layers_, .index = static_cast<std::uint64_t>(ev.index)};
        msg.warm = warm(st.sync);
        msg.up_jitter.assign(static_cast<std::size_t>(layers_), Duration{0});
        if (relaying()) {
            msg.down_jitter = st.request_jitter;
        } else {
            msg.down_jitter.assign(static_cast<std::size_t>(layers_), Duration{0});
            msg.down_jitter.back() = st.request_jitter.back();
        }
        transmit(std::move(msg), sensor - 1, Direction::up);
    }

    void on_response(int node, Envelope msg) {
        trace(node, "deliver_message", delivery_fields(msg));
        const auto& resp = std::get<ResponseBeacon>(msg.beacon);
        const TimeStamp t4 = hw(node, now_);

        if (relaying()) {
            if (node == 0) {
                const TimeStamp t4c = sc_.compensate_pd ? compensate_processing_delay(t4, resp.pd_total) : t4;
                const ExchangeRecord rec{resp.echo_t1, resp.t2, resp.t3, t4c, resp.pd_total};
                finalize(msg, rec, ttg_master_on_response(rec, resp.payload_time));
                return;
            }
            const Duration hold = sample_hold(node, msg.index);
            const Duration hold_hw = hw(node, now_ + hold) - t4;
            queue_.push(now_ + hold, Forward{node, std::move(msg), hold_hw, TimeStamp{}});
            return;
        }

        const ExchangeRecord rec{resp.echo_t1, resp.t2, resp.t3, t4, Duration{0}};
        const TimeStamp estimate = ttg_master_on_response(rec, resp.payload_time);
        if (node == 0) {
            finalize(msg, rec, estimate);
            return;
        }
        check_exchange(rec);
        const Duration hold = sample_hold(node, msg.index);
        queue_.push(now_ + hold, Forward{node, std::move(msg), Duration{0}, estimate});
    }

    void handle(Forward& ev) {
        const int node = ev.node;
        Envelope msg = std::move(ev.msg);
        if (relaying()) {
            msg.beacon = gateway_relay_on_response(std::get<ResponseBeacon>(msg.beacon), ev.hold_hw);
            msg.layer = node;
            trace(node, "forward_response", dump_message(sc_.mode, node, std::get<ResponseBeacon>(msg.beacon))
                                                + "|index=" + std::to_string(msg.index));
            transmit(std::move(msg), node - 1, Direction::up);
            return;
        }

        const NodeState& st = nodes_[static_cast<std::size_t>(node)];
        const auto resp = ttg_gateway_respond(st.sync, ev.estimate, hw(node, now_));
        if (!resp) {
            trace(node, "forward_response", "index=" + std::to_string(msg.index) + "|no_request");
            return;
        }
        msg.beacon = *resp;
        msg.layer = node;
        msg.warm = msg.warm && warm(st.sync);
        msg.down_jitter[static_cast<std::size_t>(node - 1)] = st.request_jitter[static_cast<std::size_t>(node - 1)];
        trace(node, "forward_response", dump_message(sc_.mode, node, *resp) + "|index=" + std::to_string(msg.index)
                                            + "|estimate=" + std::to_string(ev.estimate.ps()));
        transmit(std::move(msg), node - 1, Direction::up);
    }

    static void check_exchange(const ExchangeRecord& rec) {
        if (rec.t4 <= rec.t1)
            throw std::logic_error("exchange invariant violated: t4 does not follow t1");
    }

    void finalize(const Envelope& msg, const ExchangeRecord& rec, TimeStamp estimate) {
        check_exchange(rec);
        MeasurementRecord& r = records_.at(static_cast<std::size_t>(msg.index));
        r.t_est = estimate;
        r.status = msg.warm ? RecordStatus::used : RecordStatus::excluded_warmup;
        r.down_jitter = msg.down_jitter;
        r.up_jitter = msg.up_jitter;
        trace(0, "estimate", "index=" + std::to_string(msg.index) + "|t_est=" + std::to_string(estimate.ps())
                                 + "|status=" + std::string(to_string(r.status)));
    }
};

} // namespace

RunResult run(const Scenario& scenario, const RunOptions& options) {
    scenario.validate();
    return Simulation(scenario, options).execute();
}

void write_trace(const RunResult& result, std::ostream& out) {
    for (const auto& line : result.trace)
        out << line << '\n';
}

} // namespace wsnsync
