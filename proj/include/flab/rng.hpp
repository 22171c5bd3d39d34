#pragma once

// Counter-based random numbers (Philox4x32-10).  Every variate is a pure
// function of (seed, path, step, slot, stream), so path ensembles are
// bitwise reproducible no matter how work is split across threads.

#include <array>
#include <cmath>
#include <cstdint>

namespace flab {

namespace detail {

inline void philox_mulhilo(std::uint32_t a, std::uint32_t b,
                           std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

struct Philox4x32 {
    static constexpr std::uint32_t M0 = 0xD2511F53u;
    static constexpr std::uint32_t M1 = 0xCD9E8D57u;
    static constexpr std::uint32_t W0 = 0x9E3779B9u;
    static constexpr std::uint32_t W1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::uint64_t seed,
                                              std::array<std::uint32_t, 4> ctr) {
        std::uint32_t k0 = static_cast<std::uint32_t>(seed);
        std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            detail::philox_mulhilo(M0, ctr[0], hi0, lo0);
            detail::philox_mulhilo(M1, ctr[2], hi1, lo1);
            ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
            k0 += W0;
            k1 += W1;
        }
        return ctr;
    }
};

// streams keep independent purposes from colliding on the same counter
enum : std::uint32_t {
    kStreamNoise = 0,
    kStreamKill = 1,
    kStreamGeneric = 2,
};

namespace detail {

inline double u64_to_unit(std::uint64_t x) {
    // (0,1]: Box-Muller takes log of this
    return (static_cast<double>(x >> 11) + 1.0) * 0x1p-53;
}

}  // namespace detail

// two independent N(0,1) draws for the counter (path, step, slot, stream)
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t path,
                                         std::uint64_t step, std::uint32_t slot,
                                         std::uint32_t stream) {
    auto w = Philox4x32::block(
        seed, {static_cast<std::uint32_t>(path),
               static_cast<std::uint32_t>(step) ^ (static_cast<std::uint32_t>(path >> 32) << 24),
               slot ^ (static_cast<std::uint32_t>(step >> 32) << 8), stream});
    double u1 = detail::u64_to_unit((static_cast<std::uint64_t>(w[0]) << 32) | w[1]);
    double u2 = detail::u64_to_unit((static_cast<std::uint64_t>(w[2]) << 32) | w[3]);
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

inline double normal_at(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                        std::uint32_t slot, std::uint32_t stream = kStreamNoise) {
    return normal_pair(seed, path, step, slot, stream)[0];
}

inline double uniform_at(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                         std::uint32_t slot, std::uint32_t stream = kStreamKill) {
    auto w = Philox4x32::block(
        seed, {static_cast<std::uint32_t>(path),
               static_cast<std::uint32_t>(step) ^ (static_cast<std::uint32_t>(path >> 32) << 24),
               slot ^ (static_cast<std::uint32_t>(step >> 32) << 8), stream});
    return detail::u64_to_unit((static_cast<std::uint64_t>(w[0]) << 32) | w[1]);
}

// splitmix64; used to derive per-evaluation sub-seeds
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(seed ^ mix64(a)) ^ b);
}

}  // namespace flab
