#pragma once

#include <cstdint>

#include "talkstab/stats.hpp"

namespace talkstab {

// Counter-based pseudo-random generator: the SplitMix64 output function on a
// Weyl sequence. Draw k for seed s is a pure function of (s, k), so streams
// are reproducible bit-for-bit on any platform and trivially splittable.
class CounterRng {
public:
    explicit CounterRng(uint64_t seed) : seed_(seed), counter_(0) {}

    // Independent stream derived from this seed; used to decorrelate
    // per-fixture sub-streams without sharing counters.
    CounterRng stream(uint64_t stream_id) const {
        return CounterRng(mix(seed_ + 0x9E3779B97F4A7C15ull * (stream_id + 1)));
    }

    uint64_t next_u64() { return at(counter_++); }

    // Draw k of the stream without advancing state.
    uint64_t at(uint64_t k) const { return mix(seed_ + (k + 1) * 0x9E3779B97F4A7C15ull); }

    // Uniform on [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via the inverse CDF; avoids platform-dependent
    // transcendental sequences in Box-Muller rejection loops.
    double next_gaussian() {
        double u = next_double();
        if (u < 0x1.0p-53) u = 0x1.0p-53;
        return normal_quantile(u);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * next_gaussian(); }

    uint64_t counter() const { return counter_; }

private:
    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    uint64_t seed_;
    uint64_t counter_;
};

} // namespace talkstab
