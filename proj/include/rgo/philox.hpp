#pragma once

#include <cstdint>
#include <stdexcept>

// Philox-4x32 counter-based PRNG (Salmon et al., SC'11), with the round
// count exposed as a parameter so reduced-strength variants (Philox 5/3)
// can be generated and costed. Word order, output permutation and the
// Weyl key schedule follow the published Philox-4x32 reference, so the
// standard known-answer vectors apply at rounds=10.

namespace rgo {

struct PhiloxKey {
    uint32_t k0 = 0;
    uint32_t k1 = 0;
    friend bool operator==(const PhiloxKey&, const PhiloxKey&) = default;
};

struct PhiloxCounter {
    uint32_t c0 = 0;  // least significant word for increment
    uint32_t c1 = 0;
    uint32_t c2 = 0;
    uint32_t c3 = 0;
    friend bool operator==(const PhiloxCounter&, const PhiloxCounter&) = default;
};

struct PhiloxBlock {
    uint32_t w0 = 0;
    uint32_t w1 = 0;
    uint32_t w2 = 0;
    uint32_t w3 = 0;

    uint32_t word(int lane) const {
        switch (lane) {
            case 0: return w0;
            case 1: return w1;
            case 2: return w2;
            default: return w3;
        }
    }
    friend bool operator==(const PhiloxBlock&, const PhiloxBlock&) = default;
};

namespace philox_detail {
inline constexpr uint32_t kMult0 = 0xD2511F53u;
inline constexpr uint32_t kMult1 = 0xCD9E8D57u;
inline constexpr uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr uint32_t kWeyl1 = 0xBB67AE85u;
}  // namespace philox_detail

/// One S-P round: two 32x32->64 wide multiplies, then xor/permute.
/// All arithmetic wraps.
inline PhiloxCounter philox_round(const PhiloxCounter& s, const PhiloxKey& key) {
    const uint64_t p0 = static_cast<uint64_t>(philox_detail::kMult0) * s.c0;
    const uint64_t p1 = static_cast<uint64_t>(philox_detail::kMult1) * s.c2;
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    return PhiloxCounter{hi1 ^ s.c1 ^ key.k0, lo1, hi0 ^ s.c3 ^ key.k1, lo0};
}

/// Weyl key schedule step, applied between rounds.
inline PhiloxKey bump_key(const PhiloxKey& key) {
    return PhiloxKey{key.k0 + philox_detail::kWeyl0, key.k1 + philox_detail::kWeyl1};
}

/// Advance a counter by n 128-bit blocks, carrying c0 -> c1 -> c2 -> c3.
inline PhiloxCounter advance(PhiloxCounter c, uint64_t n) {
    const uint32_t lo = static_cast<uint32_t>(n);
    uint32_t hi = static_cast<uint32_t>(n >> 32);
    c.c0 += lo;
    if (c.c0 < lo) ++hi;
    c.c1 += hi;
    if (c.c1 < hi) {
        if (++c.c2 == 0) ++c.c3;
    }
    return c;
}

/// Full keyed permutation: `rounds` rounds with a key bump between rounds
/// (R rounds, R-1 bumps). rounds=10 is the published Philox-4x32-10.
inline PhiloxBlock philox_block(const PhiloxKey& key, const PhiloxCounter& counter,
                                int rounds) {
    if (rounds < 1 || rounds > 16)
        throw std::invalid_argument("philox_block: rounds must be in [1,16]");
    PhiloxCounter s = counter;
    PhiloxKey k = key;
    s = philox_round(s, k);
    for (int r = 1; r < rounds; ++r) {
        k = bump_key(k);
        s = philox_round(s, k);
    }
    return PhiloxBlock{s.c0, s.c1, s.c2, s.c3};
}

}  // namespace rgo
