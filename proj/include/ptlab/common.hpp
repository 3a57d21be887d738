#pragma once

#include <cstdint>
#include <random>

namespace ptlab {

using Index = std::int32_t;
using Real = double;

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds from
/// (base, salt) pairs so e.g. per-epoch dropout masks never collide with
/// the parameter-init stream.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace ptlab
