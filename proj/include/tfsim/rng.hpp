#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace tfsim::rng {

// Counter-based random number generation.
//
// Every stochastic quantity in the simulator is derived from a Philox4x32-10
// block cipher keyed by (seed, stream) and indexed by a block counter, so a
// given (seed, stream, index) always yields the same value regardless of call
// order, platform word size, or how many other streams were consumed.  This
// is what makes whole-scenario runs bit-reproducible from a single seed.

// 64-bit FNV-1a hash, used to turn stream labels into stream ids.
inline constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64 finalizer; decorrelates nearby seeds before keying Philox.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Philox4x32-10: ten rounds of the Philox mixing function over a 128-bit
// counter with a 64-bit key.  Constants are the published ones.
struct Philox4x32 {
    std::uint32_t key0, key1;

    explicit Philox4x32(std::uint64_t key64)
        : key0(static_cast<std::uint32_t>(key64)),
          key1(static_cast<std::uint32_t>(key64 >> 32)) {}

    static void mulhilo(std::uint32_t a, std::uint32_t b,
                        std::uint32_t& hi, std::uint32_t& lo) {
        std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    std::array<std::uint32_t, 4> block(std::uint64_t counter) const {
        std::uint32_t c0 = static_cast<std::uint32_t>(counter);
        std::uint32_t c1 = static_cast<std::uint32_t>(counter >> 32);
        std::uint32_t c2 = 0, c3 = 0;
        std::uint32_t k0 = key0, k1 = key1;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(0xD2511F53u, c0, hi0, lo0);
            mulhilo(0xCD9E8D57u, c2, hi1, lo1);
            std::uint32_t n0 = hi1 ^ c1 ^ k0;
            std::uint32_t n1 = lo1;
            std::uint32_t n2 = hi0 ^ c3 ^ k1;
            std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return {c0, c1, c2, c3};
    }
};

// Sequential stream of deterministic variates drawn from one Philox key.
// One 128-bit block provides two uint64 words; uniforms take 53 mantissa
// bits, Gaussians come from Box-Muller on uniform pairs.
class Stream {
public:
    Stream(std::uint64_t seed, std::string_view label)
        : gen_(splitmix64(seed ^ fnv1a64(label))) {}

    std::uint64_t next_u64() {
        if (have_word_) {
            have_word_ = false;
            return spare_word_;
        }
        auto b = gen_.block(counter_++);
        spare_word_ = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
        have_word_ = true;
        return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    }

    // Uniform on [0, 1).
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal.
    double next_gaussian() {
        if (have_gauss_) {
            have_gauss_ = false;
            return spare_gauss_;
        }
        // u1 in (0, 1] so the log is finite.
        double u1 = 1.0 - next_uniform();
        double u2 = next_uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.28318530717958647692 * u2;
        spare_gauss_ = r * std::sin(a);
        have_gauss_ = true;
        return r * std::cos(a);
    }

    // Exponential with unit mean.
    double next_exponential() {
        return -std::log(1.0 - next_uniform());
    }

private:
    Philox4x32 gen_;
    std::uint64_t counter_ = 0;
    std::uint64_t spare_word_ = 0;
    double spare_gauss_ = 0.0;
    bool have_word_ = false;
    bool have_gauss_ = false;
};

} // namespace tfsim::rng
