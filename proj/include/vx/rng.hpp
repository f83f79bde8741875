#ifndef VX_RNG_HPP
#define VX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace vx {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// Every draw is addressed by (key, counter), so particle slots, replicas and
// time steps each get their own stream without any shared mutable state.
struct Philox4x32 {
    static constexpr uint32_t M0 = 0xD2511F53u;
    static constexpr uint32_t M1 = 0xCD9E8D57u;
    static constexpr uint32_t W0 = 0x9E3779B9u;
    static constexpr uint32_t W1 = 0xBB67AE85u;

    static inline void round(uint32_t ctr[4], uint32_t k0, uint32_t k1) {
        uint64_t p0 = uint64_t(M0) * ctr[0];
        uint64_t p1 = uint64_t(M1) * ctr[2];
        uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
        uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
        uint32_t out[4];
        out[0] = hi1 ^ ctr[1] ^ k0;
        out[1] = lo1;
        out[2] = hi0 ^ ctr[3] ^ k1;
        out[3] = lo0;
        ctr[0] = out[0]; ctr[1] = out[1]; ctr[2] = out[2]; ctr[3] = out[3];
    }

    // 10 rounds; returns 4x32 bits in ctr.
    static inline void block(uint32_t ctr[4], uint32_t key0, uint32_t key1) {
        uint32_t k0 = key0, k1 = key1;
        for (int r = 0; r < 10; ++r) {
            round(ctr, k0, k1);
            k0 += W0;
            k1 += W1;
        }
    }
};

// One 128-bit block addressed by (seed; a, b, c) with c a 64-bit index.
struct RandomBlock {
    uint32_t w[4];

    RandomBlock(uint64_t seed, uint32_t a, uint32_t b, uint64_t c) {
        w[0] = a;
        w[1] = b;
        w[2] = uint32_t(c);
        w[3] = uint32_t(c >> 32);
        Philox4x32::block(w, uint32_t(seed), uint32_t(seed >> 32));
    }

    uint64_t u64(int i) const { return (uint64_t(w[2 * i + 1]) << 32) | w[2 * i]; }
    // Uniform in (0, 1]; safe under log().
    double uniform_pos(int i) const { return double((u64(i) >> 11) + 1) * 0x1p-53; }
    // Uniform in [0, 1).
    double uniform(int i) const { return double(u64(i) >> 11) * 0x1p-53; }
};

// Two standard normals from one block (Box-Muller).
inline std::pair<double, double> normal_pair(const RandomBlock& b) {
    double r = std::sqrt(-2.0 * std::log(b.uniform_pos(0)));
    double th = 2.0 * std::numbers::pi * b.uniform(1);
    return {r * std::cos(th), r * std::sin(th)};
}

// splitmix64, used to derive independent stream seeds.
inline uint64_t mix_seed(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t tag) {
    return mix_seed(master ^ mix_seed(tag));
}

}  // namespace vx

#endif
