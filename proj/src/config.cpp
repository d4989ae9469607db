#include "wsnsync/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <string>

#include "wsnsync/errors.hpp"

namespace wsnsync {

using nlohmann::json;

namespace {

template <class Int>
std::vector<Int> parse_range(std::string_view text, const char* what) {
    auto parse_one = [&](std::string_view s) {
        Int v{};
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ConfigError(std::string("invalid ") + what + " '" + std::string(text) + "'");
        return v;
    };
    const auto dots = text.find("..");
    const Int lo = parse_one(text.substr(0, dots));
    const Int hi = dots == std::string_view::npos ? lo : parse_one(text.substr(dots + 2));
    if (hi < lo)
        throw ConfigError(std::string("empty ") + what + " range '" + std::string(text) + "'");
    std::vector<Int> out;
    for (Int v = lo;; ++v) {
        out.push_back(v);
        if (v == hi)
            break;
    }
    return out;
}

double get_real(const json& v, const std::string& key) {
    if (!v.is_number())
        throw ConfigError("config key '" + key + "' must be a number");
    return v.get<double>();
}

std::int64_t get_int(const json& v, const std::string& key) {
    if (!v.is_number_integer())
        throw ConfigError("config key '" + key + "' must be an integer");
    return v.get<std::int64_t>();
}

bool get_bool(const json& v, const std::string& key) {
    if (!v.is_boolean())
        throw ConfigError("config key '" + key + "' must be true or false");
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& key) {
    if (!v.is_string())
        throw ConfigError("config key '" + key + "' must be a string");
    return v.get<std::string>();
}

SyncMode get_mode(const json& v, const std::string& key) {
    const auto mode = parse_sync_mode(get_string(v, key));
    if (!mode)
        throw ConfigError("config key '" + key + "' must be \"relaying\" or \"ttg\"");
    return *mode;
}

std::vector<SyncMode> get_modes(const json& v, const std::string& key) {
    if (v.is_string() && v.get<std::string>() == "both")
        return {SyncMode::packet_relaying, SyncMode::time_translating};
    if (v.is_string())
        return {get_mode(v, key)};
    if (!v.is_array() || v.empty())
        throw ConfigError("config key '" + key + "' must be a non-empty array of modes or \"both\"");
    std::vector<SyncMode> out;
    for (const auto& item : v)
        out.push_back(get_mode(item, key));
    return out;
}

template <class Int>
std::vector<Int> get_int_list(const json& v, const std::string& key) {
    if (v.is_string())
        return parse_range<Int>(v.get<std::string>(), key.c_str());
    if (!v.is_array() || v.empty())
        throw ConfigError("config key '" + key + "' must be a non-empty array or an \"A..B\" range");
    std::vector<Int> out;
    for (const auto& item : v) {
        const std::int64_t x = get_int(item, key);
        if (x < 0)
            throw ConfigError("config key '" + key + "' entries must be non-negative");
        out.push_back(static_cast<Int>(x));
    }
    return out;
}

} // namespace

Config::Config()
    : layers(parse_range<int>("1..20", "layers")),
      jitter_stds{scenario.jitter_std_s},
      seeds(parse_range<std::uint64_t>("1..20", "seeds")) {}

std::vector<int> parse_layer_range(std::string_view text) { return parse_range<int>(text, "layers"); }
std::vector<std::uint64_t> parse_seed_range(std::string_view text) { return parse_range<std::uint64_t>(text, "seeds"); }

Config config_from_json(const json& doc) {
    if (!doc.is_object())
        throw ConfigError("config must be a JSON object");
    Config c;
    Scenario& s = c.scenario;
    bool jitter_list_given = false;
    for (const auto& [key, v] : doc.items()) {
        if (key == "num_layers") s.num_layers = static_cast<int>(get_int(v, key));
        else if (key == "duration_s") s.duration_s = get_real(v, key);
        else if (key == "n_measurements") s.n_measurements = static_cast<int>(get_int(v, key));
        else if (key == "mode") s.mode = get_mode(v, key);
        else if (key == "link_distance_m") s.link_distance_m = get_real(v, key);
        else if (key == "propagation_speed_mps") s.propagation_speed_mps = get_real(v, key);
        else if (key == "jitter_std_s") s.jitter_std_s = get_real(v, key);
        else if (key == "gateway_pd") s.gateway_pd = ProcessingDelay::parse(get_string(v, key));
        else if (key == "request_mean_interval_s") s.request_mean_interval_s = get_real(v, key);
        else if (key == "skew_bound_ppm") s.skew_bound_ppm = get_real(v, key);
        else if (key == "offset_bound_s") s.offset_bound_s = get_real(v, key);
        else if (key == "seed") {
            const std::int64_t seed = get_int(v, key);
            if (seed < 0)
                throw ConfigError("config key 'seed' must be non-negative");
            s.seed = static_cast<std::uint64_t>(seed);
            c.seed_given = true;
        }
        else if (key == "compensate_pd") s.compensate_pd = get_bool(v, key);
        else if (key == "frequency_sync") s.frequency_sync = get_bool(v, key);
        else if (key == "request_schedule") {
            const std::string sched = get_string(v, key);
            if (sched == "poisson") s.request_schedule = RequestSchedule::poisson;
            else if (sched == "periodic") s.request_schedule = RequestSchedule::periodic;
            else throw ConfigError("config key 'request_schedule' must be \"poisson\" or \"periodic\"");
        }
        else if (key == "warmup_window_s") s.warmup_window_s = get_real(v, key);
        else if (key == "modes") c.modes = get_modes(v, key);
        else if (key == "layers") c.layers = get_int_list<int>(v, key);
        else if (key == "seeds") c.seeds = get_int_list<std::uint64_t>(v, key);
        else if (key == "jitter_stds") {
            if (!v.is_array() || v.empty())
                throw ConfigError("config key 'jitter_stds' must be a non-empty array");
            c.jitter_stds.clear();
            for (const auto& item : v)
                c.jitter_stds.push_back(get_real(item, key));
            jitter_list_given = true;
        }
        else if (key == "out") c.out = get_string(v, key);
        else if (key == "svg") c.svg = get_string(v, key);
        else if (key == "trace") c.trace = get_string(v, key);
        else if (key == "jobs") {
            const std::int64_t jobs = get_int(v, key);
            if (jobs < 1 || jobs > 1024)
                throw ConfigError("config key 'jobs' must be in [1, 1024]");
            c.jobs = static_cast<unsigned>(jobs);
        }
        else throw ConfigError("unknown config key '" + key + "'");
    }
    if (!jitter_list_given)
        c.jitter_stds = {s.jitter_std_s};
    s.validate();
    for (int layers : c.layers)
        if (layers < 1 || layers > 64)
            throw ConfigError("config key 'layers' entries must be in [1, 64]");
    for (double sigma : c.jitter_stds)
        if (!(sigma >= 0.0))
            throw ConfigError("config key 'jitter_stds' entries must be non-negative");
    return c;
}

Config load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(doc);
}

json config_to_json(const Config& c) {
    const Scenario& s = c.scenario;
    json modes = json::array();
    for (SyncMode m : c.modes)
        modes.push_back(std::string(to_string(m)));
    json doc = {
        {"num_layers", s.num_layers},
        {"duration_s", s.duration_s},
        {"n_measurements", s.n_measurements},
        {"mode", std::string(to_string(s.mode))},
        {"link_distance_m", s.link_distance_m},
        {"propagation_speed_mps", s.propagation_speed_mps},
        {"jitter_std_s", s.jitter_std_s},
        {"gateway_pd", s.gateway_pd.to_string()},
        {"request_mean_interval_s", s.request_mean_interval_s},
        {"skew_bound_ppm", s.skew_bound_ppm},
        {"offset_bound_s", s.offset_bound_s},
        {"seed", s.seed},
        {"compensate_pd", s.compensate_pd},
        {"frequency_sync", s.frequency_sync},
        {"request_schedule", s.request_schedule == RequestSchedule::periodic ? "periodic" : "poisson"},
        {"warmup_window_s", s.warmup_window_s},
        {"modes", modes},
        {"layers", c.layers},
        {"jitter_stds", c.jitter_stds},
        {"seeds", c.seeds},
        {"jobs", c.jobs},
    };
    if (c.out) doc["out"] = c.out->string();
    if (c.svg) doc["svg"] = c.svg->string();
    if (c.trace) doc["trace"] = c.trace->string();
    return doc;
}

} // namespace wsnsync
