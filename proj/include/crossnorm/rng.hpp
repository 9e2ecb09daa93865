#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11) and the
// normal variates derived from it. A draw is a pure function of
// (seed, sample, draw, tag), so any partition of the work reproduces it.

#include <array>
#include <cstdint>
#include <span>

#include "crossnorm/special_functions.hpp"

namespace crossnorm::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter philox4x32_10(Counter ctr, Key key) {
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += w0;
            key[1] += w1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
}

enum class Tag : std::uint32_t { normal = 0, covariance = 1, start_point = 2, weights = 3 };

/// Four 32-bit words for (sample, draw) under `seed`.
inline Counter block(std::uint64_t seed, std::uint64_t sample, std::uint32_t draw, Tag tag) {
    const Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const Counter ctr{static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(sample >> 32), draw,
                      static_cast<std::uint32_t>(tag)};
    return philox4x32_10(ctr, key);
}

/// Uniform on the open interval (0, 1) from 52 of the 64 bits.
inline double open_uniform(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Fills `out` with independent uniforms on (0, 1).
inline void uniforms(std::uint64_t seed, std::uint64_t sample, Tag tag, std::span<double> out) {
    for (std::size_t j = 0; j < out.size(); j += 2) {
        const Counter c = block(seed, sample, static_cast<std::uint32_t>(j / 2), tag);
        out[j] = open_uniform(c[0], c[1]);
        if (j + 1 < out.size()) out[j + 1] = open_uniform(c[2], c[3]);
    }
}

/// Fills `out` with independent standard normals by inverse transform.
inline void normals(std::uint64_t seed, std::uint64_t sample, Tag tag, std::span<double> out) {
    uniforms(seed, sample, tag, out);
    for (double& v : out) v = normal_quantile(v);
}

}  // namespace crossnorm::rng
