#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wsnsync/simnet.hpp"

namespace wsnsync {

/// Everything a CLI invocation needs: one scenario plus the sweep grid and
/// output locations. Absent JSON keys keep the defaults below.
struct Config {
    Scenario scenario;
    std::vector<SyncMode> modes{SyncMode::packet_relaying, SyncMode::time_translating};
    std::vector<int> layers;                // default 1..20
    std::vector<double> jitter_stds;        // default {scenario.jitter_std_s}
    std::vector<std::uint64_t> seeds;       // default 1..20
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> svg;
    std::optional<std::filesystem::path> trace;
    unsigned jobs = 1;
    bool seed_given = false;  // scenario.seed came from the file or a flag

    Config();
};

/// Strict loader: unknown keys, wrong types and invalid values throw
/// ConfigError naming the key.
Config config_from_json(const nlohmann::json& doc);
Config load_config_file(const std::filesystem::path& path);

/// Effective configuration, using the same keys the loader accepts.
nlohmann::json config_to_json(const Config& config);

/// "A" or "A..B" (inclusive). Throws ConfigError.
std::vector<int> parse_layer_range(std::string_view text);
std::vector<std::uint64_t> parse_seed_range(std::string_view text);

} // namespace wsnsync
