#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vrw {

/// splitmix64 finalizer. Also the avalanche mix behind seed_stream and the
/// counter-based clock randomness, so streams are stable across versions.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b));
}

/// Uniform double in [0,1) from a raw 64-bit word (53 mantissa bits).
inline double u01_from_bits(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Replica-local generator. All distributions are derived from the raw
/// 64-bit stream by inverse CDF so traces are reproducible given the seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_bits() { return eng_(); }

    /// Uniform in [0,1).
    double uniform() { return u01_from_bits(eng_()); }

    /// Mean-1 exponential via inverse CDF; -log of a (0,1] variate.
    double exponential() { return -std::log(1.0 - uniform()); }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 eng_;
};

}  // namespace vrw
