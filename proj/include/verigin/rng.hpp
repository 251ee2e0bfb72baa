#pragma once

#include <cstdint>

namespace verigin {

// splitmix64: tiny deterministic generator, identical across platforms
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed + 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::int64_t index(std::int64_t n) { return std::int64_t(next_u64() % std::uint64_t(n)); }
};

} // namespace verigin
