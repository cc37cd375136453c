#pragma once

#include <cstdint>
#include <random>

namespace mici {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Independent generator keyed by (seed, a, b). Used so that each
/// (iteration, member) pair owns its own stream regardless of scheduling.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ (a + 0x632BE59BD9B4E019ULL));
    h = detail::splitmix64(h ^ (b + 0x8CB92BA72F3D8DD7ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) {
    if (!(hi > lo)) return lo;
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

}  // namespace mici
