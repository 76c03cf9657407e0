#pragma once

#include <cstdint>

namespace copnet {

// Counter-based generator (splitmix64). Output sequences are a pure
// function of (seed, stream indices), identical across platforms and
// thread counts, so per-slice streams can be drawn in any order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x6A09E667F3BCC909ull)) {}

    // Independent stream keyed by up to two indices (slice, repetition).
    static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        std::uint64_t s = mix(seed + 0x9E3779B97F4A7C15ull);
        s = mix(s ^ (a + 0xBF58476D1CE4E5B9ull));
        s = mix(s ^ (b + 0x94D049BB133111EBull));
        Rng rng(0);
        rng.state_ = s;
        return rng;
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Uniform in [0, 1) with 53 bits.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform over the inclusive integer range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = std::uint64_t(hi - lo) + 1;
        return lo + std::int64_t(next_u64() % span);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

}  // namespace copnet
