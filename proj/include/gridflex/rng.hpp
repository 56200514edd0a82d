#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gridflex {

// Self-contained generator so draws are bit-reproducible across platforms
// and independent of libstdc++ distribution internals.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Stream seed derivation rule: one master seed, split by (scenario index,
/// replication index). Documented so results can be reproduced externally.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t scenario,
                                   std::uint64_t replication) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s) ^ (scenario * 0xd1342543de82ef95ull);
    std::uint64_t b = splitmix64(a) ^ (replication * 0xaf251af3b0f025b5ull);
    return splitmix64(b);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard-normal draw via Box-Muller. Consumes exactly two uniforms
    /// per call (no cached second value), so the stream position is a pure
    /// function of the call count.
    double gauss() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    double gauss(double mean, double sd) { return mean + sd * gauss(); }

private:
    std::uint64_t state_;
};

} // namespace gridflex
