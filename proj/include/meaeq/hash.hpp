#pragma once

#include <cstdint>
#include <string_view>

namespace meaeq {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// 64-bit FNV-1a. Used for content digests and per-text PRNG seeding.
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = kFnvOffset) noexcept {
    for (unsigned char c : bytes) {
        state ^= c;
        state *= kFnvPrime;
    }
    return state;
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Derives an independent stream seed from a base seed and a tag.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) noexcept {
    return mix64(base ^ mix64(tag + 0x9e3779b97f4a7c15ULL));
}

} // namespace meaeq
