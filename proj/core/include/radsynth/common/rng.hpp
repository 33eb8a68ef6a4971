#pragma once

#include <cstdint>
#include <random>

namespace radsynth {

/// Seeded random source with platform-independent distributions.
///
/// std::uniform_*_distribution and std::normal_distribution are
/// implementation-defined, so draws here are built directly on the
/// mt19937_64 bit stream. Every stage that needs byte-identical re-runs
/// goes through this type.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for (seed, stream) via splitmix64 mixing.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t index(std::uint64_t n);

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t integer(std::int64_t lo, std::int64_t hi);

    /// Standard normal via Box-Muller (pairs cached).
    double normal();

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace radsynth
