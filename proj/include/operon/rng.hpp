#pragma once

#include <cstdint>
#include <random>

namespace operon {

using Rng = std::mt19937_64;

// splitmix64 step; used to derive independent seeds from (master, index, ...)
// so that generation order and worker count never affect sampled content.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    s ^= a + 0x517cc1b727220a95ULL;
    h ^= splitmix64(s);
    s ^= b + 0x2545f4914f6cdd1dULL;
    h ^= splitmix64(s);
    return h;
}

}  // namespace operon
