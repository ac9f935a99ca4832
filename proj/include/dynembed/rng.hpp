#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dynembed::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// All randomness flows from one root seed through named sub-streams, so
// pipeline stages can be re-run independently without disturbing each other.
inline std::uint64_t derive(std::uint64_t seed, std::string_view tag) {
    return splitmix64(seed ^ fnv1a(tag));
}

inline std::uint64_t derive(std::uint64_t seed, std::string_view tag, std::uint64_t a) {
    return splitmix64(derive(seed, tag) ^ splitmix64(a ^ 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t derive(std::uint64_t seed, std::string_view tag, std::uint64_t a,
                            std::uint64_t b) {
    return splitmix64(derive(seed, tag, a) ^ splitmix64(b ^ 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive(std::uint64_t seed, std::string_view tag, std::uint64_t a,
                            std::uint64_t b, std::uint64_t c) {
    return splitmix64(derive(seed, tag, a, b) ^ splitmix64(c ^ 0xd1b54a32d192ed03ULL));
}

inline std::mt19937_64 engine(std::uint64_t seed) {
    return std::mt19937_64{seed};
}

} // namespace dynembed::rng
