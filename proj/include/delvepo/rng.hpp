#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace delvepo {

/// FNV-1a over raw bytes. Used for genome content hashes and derived seeds.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 14695981039346656037ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64_mix(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Deterministic sub-seed for a named stream of a run-level seed.
inline std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view stream) {
    return fnv1a64(stream, fnv1a64_mix(14695981039346656037ULL, root_seed));
}

using Rng = std::mt19937_64;

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// mt19937_64 state as text; stable across runs on the same standard library.
inline std::string rng_state_to_string(const Rng& rng) {
    std::ostringstream oss;
    oss << rng;
    return oss.str();
}

inline Rng rng_state_from_string(const std::string& state) {
    Rng rng;
    std::istringstream iss(state);
    iss >> rng;
    return rng;
}

}  // namespace delvepo
