#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace meaeq {

// Seeded generator with a platform-independent bounded draw (rejection
// sampling instead of std::uniform_int_distribution, whose algorithm is
// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

// k distinct positions from [0, n) by a partial Fisher-Yates shuffle, in draw order.
inline std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(k);
    return perm;
}

} // namespace meaeq
