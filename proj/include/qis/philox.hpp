#pragma once

#include <array>
#include <cstdint>

namespace qis::rng {

/// Philox4x32-10 counter-based block generator. Each (counter, key) pair maps
/// to 128 independent output bits, so any loop order or thread layout that
/// assigns distinct counters reproduces the same draws.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static Counter block(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

inline Philox4x32::Key key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Uniform double in the open interval (0,1): 52 random bits centered in the
/// bin, so 0 and 1 are never produced and log(u) is always finite.
inline double uniform_from_block(const Philox4x32::Counter& words) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1p-52;
}

inline double uniform(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2, std::uint32_t c3,
                      Philox4x32::Key key) {
    return uniform_from_block(Philox4x32::block({c0, c1, c2, c3}, key));
}

} // namespace qis::rng
