#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace droplock {

// Philox4x32-10 block function (Salmon et al., Random123). Pure function of
// (counter, key), so any sample can be regenerated without replaying a stream.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Independent substreams of the master seed.
enum class Stream : std::uint64_t {
    SampleNoise = 1,
    DropletLoading = 2,
    RateJitter = 3,
    Particles = 4,
    Titration = 5,
    Test = 99,
};

// Counter-addressed generator: every draw is keyed by (seed, stream, substream)
// and indexed by a 64-bit counter, so parallel evaluation order cannot change
// results.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0) {
        const std::uint64_t k =
            splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream) * 0x100000001B3ull + substream));
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
        tag_ = static_cast<std::uint32_t>(splitmix64(k));
    }

    std::array<std::uint32_t, 4> block(std::uint64_t counter) const {
        return philox4x32({static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32), tag_, 0u},
                          key_);
    }

    // Two uniforms in (0, 1] with 53-bit resolution.
    std::pair<double, double> uniform_pair(std::uint64_t counter) const {
        const auto b = block(counter);
        return {to_unit(b[0], b[1]), to_unit(b[2], b[3])};
    }

    // Four uniforms in (0, 1) with 32-bit resolution.
    std::array<double, 4> uniform4(std::uint64_t counter) const {
        const auto b = block(counter);
        constexpr double kScale = 0x1p-32;
        return {(b[0] + 0.5) * kScale, (b[1] + 0.5) * kScale, (b[2] + 0.5) * kScale, (b[3] + 0.5) * kScale};
    }

    // Two independent standard normals (Box-Muller).
    std::pair<double, double> normal_pair(std::uint64_t counter) const {
        const auto [u1, u2] = uniform_pair(counter);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    double normal(std::uint64_t counter) const { return normal_pair(counter).first; }

private:
    static double to_unit(std::uint32_t lo, std::uint32_t hi) {
        const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 1.0) * 0x1p-53;
    }

    std::array<std::uint32_t, 2> key_{};
    std::uint32_t tag_ = 0;
};

// Derives a child seed for independent runs (titration points, calibration runs).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0xA5A5A5A5ull));
}

}  // namespace droplock
