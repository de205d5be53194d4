#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace leq::rng {

/// Philox4x32-10 block function (Salmon et al., SC'11): a keyed bijection on
/// 128-bit counters. Output depends only on (counter, key).
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter philox4x32_10(Counter ctr, Key key) noexcept
{
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

/// Stream tags keep independent uses of one seed apart.
enum class Stream : std::uint32_t {
    brownian = 0,
    perturbation = 1,
    instance = 2,
};

inline Key key_from_seed(std::uint64_t seed) noexcept
{
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Uniform in (0, 1] from 53 random bits.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept
{
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

/// Two uniforms in (0, 1] for (stream, a, b), e.g. a = step, b = path.
inline std::array<double, 2> uniform_pair(std::uint64_t seed, Stream stream, std::uint32_t a,
                                          std::uint64_t b) noexcept
{
    const Counter out = philox4x32_10(
        {a, static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
         static_cast<std::uint32_t>(stream)},
        key_from_seed(seed));
    return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
}

/// Standard normal deviate as a pure function of (seed, path, step).
inline double standard_normal(std::uint64_t seed, std::uint64_t path, std::uint32_t step) noexcept
{
    const auto u = uniform_pair(seed, Stream::brownian, step, path);
    return std::sqrt(-2.0 * std::log(u[0])) * std::cos(2.0 * std::numbers::pi * u[1]);
}

} // namespace leq::rng
