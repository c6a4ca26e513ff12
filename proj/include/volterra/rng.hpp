// Portable seeded random numbers.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The mappings to doubles and bounded integers below are written
// out explicitly because the standard distributions are implementation
// defined, and noise realizations must be reproducible across toolchains.
#pragma once

#include <cstdint>
#include <random>

namespace volterra {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace volterra
