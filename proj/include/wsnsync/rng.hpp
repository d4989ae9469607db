#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace wsnsync {

/// Sequential generator used for every per-stream draw.
using Rng = std::mt19937_64;

/// SplitMix64 output function; used to hash keys into seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Small counter-based generator. Cheap to construct, so one instance per
/// keyed draw is fine.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        const std::uint64_t out = mix64(state_);
        state_ += 0x9e3779b97f4a7c15ULL;
        return out;
    }

private:
    std::uint64_t state_;
};

/// Independent random substreams.
enum class StreamTag : std::uint64_t {
    clock = 1,
    measurement = 2,
    request = 3,
    link_jitter = 4,
    processing_delay = 5,
};

/// Derives substream seeds from one run seed so that the same (tag, key)
/// always yields the same draws, whatever else the run does. Scenarios that
/// differ only in mode, layer count or jitter scale therefore share clocks,
/// measurement times and standard-normal jitter draws.
class SeedTree {
public:
    explicit constexpr SeedTree(std::uint64_t seed) : seed_(seed) {}

    [[nodiscard]] constexpr std::uint64_t derive(StreamTag tag, std::initializer_list<std::uint64_t> key = {}) const {
        std::uint64_t h = mix64(seed_ ^ mix64(static_cast<std::uint64_t>(tag)));
        for (std::uint64_t k : key)
            h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
        return h;
    }

    [[nodiscard]] Rng stream(StreamTag tag, std::initializer_list<std::uint64_t> key = {}) const {
        return Rng{derive(tag, key)};
    }

    [[nodiscard]] constexpr SplitMix64 keyed(StreamTag tag, std::initializer_list<std::uint64_t> key) const {
        return SplitMix64{derive(tag, key)};
    }

    [[nodiscard]] constexpr std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

} // namespace wsnsync
