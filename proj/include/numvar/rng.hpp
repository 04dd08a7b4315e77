#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, stream id, sub-stream id, draw index), so results do not depend on
// the order in which replications or particles are processed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace nv::rng {

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

/// Maps 64 random bits to a double in the open interval (0, 1).
inline double to_open_unit(std::uint64_t bits) {
    // the top value would round to 1.0
    return std::min((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53, 0x1.fffffffffffffp-1);
}

/// Sub-stream tags reserved for non-particle draws inside a replication.
enum class Purpose : std::uint32_t {
    particle = 0,
    shift = 1,
    far_field = 2,
    poisson_count = 3,
    bootstrap = 4,
    gaussian_path = 5,
    direct = 6,
};

/// A reproducible stream of random numbers. Satisfies UniformRandomBitGenerator.
class Stream {
public:
    using result_type = std::uint64_t;

    Stream(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream = 0, Purpose purpose = Purpose::particle)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream),
          substream_(substream),
          purpose_(static_cast<std::uint32_t>(purpose)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 2) refill();
        return buffer_[pos_++];
    }

    double uniform() { return to_open_unit((*this)()); }

    double exponential() { return -std::log(uniform()); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(2.0 * exponential());
        const double phi = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

private:
    void refill() {
        // stream (64 bits) and purpose-tagged substream fill the upper words
        const std::array<std::uint32_t, 4> ctr = {
            block_++, substream_, static_cast<std::uint32_t>(stream_),
            static_cast<std::uint32_t>(stream_ >> 32) ^ (purpose_ << 24)};
        const auto out = philox4x32(ctr, key_);
        buffer_[0] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
        buffer_[1] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint32_t substream_;
    std::uint32_t purpose_;
    std::uint32_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int pos_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Two uniforms for one particle, drawn from a single Philox block.
inline std::array<double, 2> particle_uniforms(std::uint64_t seed, std::uint64_t replication, std::int64_t particle) {
    const auto id = static_cast<std::uint32_t>(static_cast<std::uint64_t>(particle) + 0x80000000ull);
    const std::array<std::uint32_t, 4> ctr = {0u, id, static_cast<std::uint32_t>(replication),
                                              static_cast<std::uint32_t>(replication >> 32)};
    const auto out = philox4x32(ctr, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return {to_open_unit((static_cast<std::uint64_t>(out[0]) << 32) | out[1]),
            to_open_unit((static_cast<std::uint64_t>(out[2]) << 32) | out[3])};
}

}  // namespace nv::rng
