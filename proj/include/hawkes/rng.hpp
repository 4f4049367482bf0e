#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace hawkes {

/*
 * Counter-based generator: output n is a bijective mix of (key, n).
 * Streams derived from the same seed with different ids are independent,
 * so any (seed, iteration, dimension, term) tuple can be replayed alone.
 * Satisfies UniformRandomBitGenerator.
 */
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key = 0) noexcept : key_(mix(key ^ 0x6a09e667f3bcc909ULL)) {}

    [[nodiscard]] static CounterRng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) noexcept {
        std::uint64_t k = mix(seed + 0x9e3779b97f4a7c15ULL);
        for (auto id : ids) k = mix(k ^ mix(id + 0xbb67ae8584caa73bULL));
        return CounterRng(k);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1), safe for logarithms.
    double uniform_open() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    // Uniform integer on [0, n); n > 0. Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) noexcept {
        __uint128_t m = static_cast<__uint128_t>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<__uint128_t>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

private:
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_{0};
};

}  // namespace hawkes
