#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rgo/philox.hpp"

// Deterministic dropout-mask generation. Every attention intermediate
// element (b, h, i, j) maps to one Philox output word through a global
// linear counter layout, so the fused and decoupled paths reproduce the
// same keep bits regardless of tiling or worker count.

namespace rgo {

struct MaskLayout {
    uint32_t batch = 1;
    uint32_t heads = 1;
    uint32_t seq = 1;          // rows == cols == seq
    uint64_t seed = 0;
    uint64_t base_offset = 0;  // counter offset of block 0

    uint64_t elem_count() const {
        return static_cast<uint64_t>(batch) * heads * seq * static_cast<uint64_t>(seq);
    }

    uint64_t linear_index(uint32_t b, uint32_t h, uint32_t i, uint32_t j) const {
        if (b >= batch || h >= heads || i >= seq || j >= seq)
            throw std::invalid_argument("mask index out of range");
        return ((static_cast<uint64_t>(b) * heads + h) * seq + i) * seq + j;
    }

    PhiloxKey key() const {
        return PhiloxKey{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
    }

    void validate() const {
        if (elem_count() == 0) throw std::invalid_argument("mask layout has zero elements");
    }
};

// Keep threshold for a 32-bit uniform word. The compare value lives in a
// 64-bit domain so keep_prob == 1 admits every word (2^32 > any uint32)
// and keep_prob == 0 admits none.
struct KeepThreshold {
    float keep_prob = 1.0f;

    explicit KeepThreshold(double p) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("keep_prob must be in [0,1]");
        keep_prob = static_cast<float>(p);
    }

    uint64_t threshold() const {
        return static_cast<uint64_t>(
            std::llround(static_cast<double>(keep_prob) * 4294967296.0));
    }

    bool keeps(uint32_t word) const { return word < threshold(); }
};

/// Maps a linear element index to the Philox counter and output lane that
/// decide its keep bit. Stable across paths and across worker counts.
inline std::pair<PhiloxCounter, int> element_source(const MaskLayout& layout,
                                                    uint64_t linear_index) {
    if (linear_index >= layout.elem_count())
        throw std::invalid_argument("element_source: linear index out of range");
    const uint64_t block = linear_index >> 2;
    const int lane = static_cast<int>(linear_index & 3);
    const uint64_t ctr = layout.base_offset + block;  // wrapping
    PhiloxCounter c;
    c.c0 = static_cast<uint32_t>(ctr);
    c.c1 = static_cast<uint32_t>(ctr >> 32);
    c.c2 = 0;  // stream id 0
    c.c3 = 0;
    return {c, lane};
}

/// Recomputes one keep bit straight from the PRNG.
inline bool keep_bit_direct(const MaskLayout& layout, const KeepThreshold& thr,
                            int rounds, uint64_t linear_index) {
    const auto [ctr, lane] = element_source(layout, linear_index);
    return thr.keeps(philox_block(layout.key(), ctr, rounds).word(lane));
}

struct DropoutMask {
    MaskLayout layout;
    float keep_prob = 1.0f;
    uint32_t rounds = 7;
    std::vector<uint8_t> bits;  // 1 bit per element, bit=1 means KEEP,
                                // packed little-endian within bytes

    bool bit(uint32_t b, uint32_t h, uint32_t i, uint32_t j) const {
        const uint64_t idx = layout.linear_index(b, h, i, j);
        return (bits[idx >> 3] >> (idx & 7)) & 1u;
    }
};

namespace mask_detail {

inline constexpr uint64_t kMaxBits = uint64_t{1} << 36;

inline void fill_byte_range(const MaskLayout& layout, const KeepThreshold& thr,
                            int rounds, uint64_t byte_begin, uint64_t byte_end,
                            uint64_t n, uint8_t* out) {
    const PhiloxKey key = layout.key();
    const uint64_t t = thr.threshold();
    for (uint64_t byte = byte_begin; byte < byte_end; ++byte) {
        uint8_t acc = 0;
        // one byte covers elements [8*byte, 8*byte+8) = two Philox blocks
        for (int half = 0; half < 2; ++half) {
            const uint64_t block = byte * 2 + half;
            if (block * 4 >= n) break;
            PhiloxCounter c;
            const uint64_t ctr = layout.base_offset + block;
            c.c0 = static_cast<uint32_t>(ctr);
            c.c1 = static_cast<uint32_t>(ctr >> 32);
            const PhiloxBlock blk = philox_block(key, c, rounds);
            for (int lane = 0; lane < 4; ++lane) {
                const uint64_t idx = block * 4 + lane;
                if (idx >= n) break;
                if (blk.word(lane) < t) acc |= static_cast<uint8_t>(1u << (idx & 7));
            }
        }
        out[byte] = acc;
    }
}

}  // namespace mask_detail

/// Generates the packed keep mask. Output bytes are independent of
/// `workers`: shards are aligned to byte (8-element) boundaries and each
/// element's word is fixed by element_source.
inline DropoutMask generate_mask(const MaskLayout& layout, const KeepThreshold& thr,
                                 int rounds, unsigned workers = 0) {
    layout.validate();
    if (rounds < 1 || rounds > 16)
        throw std::invalid_argument("generate_mask: rounds must be in [1,16]");
    const uint64_t n = layout.elem_count();
    if (n > mask_detail::kMaxBits) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "generate_mask: mask needs %llu bytes, guard allows %llu bytes",
                      static_cast<unsigned long long>((n + 7) / 8),
                      static_cast<unsigned long long>(mask_detail::kMaxBits / 8));
        throw std::invalid_argument(msg);
    }
    const uint64_t bytes = (n + 7) / 8;
    DropoutMask mask;
    mask.layout = layout;
    mask.keep_prob = thr.keep_prob;
    mask.rounds = static_cast<uint32_t>(rounds);
    mask.bits.assign(bytes, 0);

    if (workers == 0) workers = std::thread::hardware_concurrency();
    if (workers <= 1 || bytes < 1024) {
        mask_detail::fill_byte_range(layout, thr, rounds, 0, bytes, n, mask.bits.data());
        return mask;
    }
    const uint64_t chunk = (bytes + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        const uint64_t lo = w * chunk;
        if (lo >= bytes) break;
        const uint64_t hi = std::min(bytes, lo + chunk);
        pool.emplace_back(mask_detail::fill_byte_range, layout, thr, rounds, lo, hi, n,
                          mask.bits.data());
    }
    for (auto& t : pool) t.join();
    return mask;
}

/// Packed bit lookup with the same result as recomputing the keep
/// predicate from philox_block.
inline bool mask_bit(const DropoutMask& mask, uint32_t b, uint32_t h, uint32_t i,
                     uint32_t j) {
    return mask.bit(b, h, i, j);
}

// ---------------------------------------------------------------------------
// Mask file format (bit-exact):
//   offset 0  magic   "RNGM"
//          4  u16     version (1)
//          6  u16     rounds
//          8  u32     B
//         12  u32     nH
//         16  u32     SQ
//         20  u64     seed
//         28  u64     base_offset
//         36  f32     keep_prob
//         40  payload ceil(B*nH*SQ^2 / 8) packed bytes
// All fields little-endian.
// ---------------------------------------------------------------------------

namespace mask_detail {

inline void store_le16(uint8_t* p, uint16_t v) {
    p[0] = static_cast<uint8_t>(v);
    p[1] = static_cast<uint8_t>(v >> 8);
}
inline void store_le32(uint8_t* p, uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
inline void store_le64(uint8_t* p, uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
inline uint16_t load_le16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
inline uint32_t load_le32(const uint8_t* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    return v;
}
inline uint64_t load_le64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    return v;
}

inline constexpr char kMagic[4] = {'R', 'N', 'G', 'M'};
inline constexpr uint16_t kVersion = 1;
inline constexpr size_t kHeaderBytes = 40;

}  // namespace mask_detail

inline void save_mask(const DropoutMask& mask, const std::filesystem::path& path) {
    using namespace mask_detail;
    uint8_t hdr[kHeaderBytes];
    std::memcpy(hdr, kMagic, 4);
    store_le16(hdr + 4, kVersion);
    store_le16(hdr + 6, static_cast<uint16_t>(mask.rounds));
    store_le32(hdr + 8, mask.layout.batch);
    store_le32(hdr + 12, mask.layout.heads);
    store_le32(hdr + 16, mask.layout.seq);
    store_le64(hdr + 20, mask.layout.seed);
    store_le64(hdr + 28, mask.layout.base_offset);
    uint32_t pbits;
    static_assert(sizeof pbits == sizeof mask.keep_prob);
    std::memcpy(&pbits, &mask.keep_prob, 4);
    store_le32(hdr + 36, pbits);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_mask: cannot open " + path.string());
    f.write(reinterpret_cast<const char*>(hdr), kHeaderBytes);
    f.write(reinterpret_cast<const char*>(mask.bits.data()),
            static_cast<std::streamsize>(mask.bits.size()));
    if (!f) throw std::runtime_error("save_mask: write failed for " + path.string());
}

inline DropoutMask load_mask(const std::filesystem::path& path) {
    using namespace mask_detail;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_mask: cannot open " + path.string());
    uint8_t hdr[kHeaderBytes];
    f.read(reinterpret_cast<char*>(hdr), kHeaderBytes);
    if (f.gcount() != kHeaderBytes)
        throw std::runtime_error("load_mask: truncated header in " + path.string());
    if (std::memcmp(hdr, kMagic, 4) != 0)
        throw std::runtime_error("load_mask: bad magic in " + path.string());
    if (load_le16(hdr + 4) != kVersion)
        throw std::runtime_error("load_mask: unsupported version in " + path.string());

    DropoutMask mask;
    mask.rounds = load_le16(hdr + 6);
    mask.layout.batch = load_le32(hdr + 8);
    mask.layout.heads = load_le32(hdr + 12);
    mask.layout.seq = load_le32(hdr + 16);
    mask.layout.seed = load_le64(hdr + 20);
    mask.layout.base_offset = load_le64(hdr + 28);
    const uint32_t pbits = load_le32(hdr + 36);
    std::memcpy(&mask.keep_prob, &pbits, 4);
    mask.layout.validate();
    if (mask.rounds < 1 || mask.rounds > 16)
        throw std::runtime_error("load_mask: rounds out of range in " + path.string());

    const uint64_t n = mask.layout.elem_count();
    const uint64_t bytes = (n + 7) / 8;
    mask.bits.resize(bytes);
    f.read(reinterpret_cast<char*>(mask.bits.data()), static_cast<std::streamsize>(bytes));
    if (static_cast<uint64_t>(f.gcount()) != bytes)
        throw std::runtime_error("load_mask: truncated payload in " + path.string());
    if (n % 8 != 0) {
        const uint8_t tail = mask.bits.back() >> (n % 8);
        if (tail != 0)
            throw std::runtime_error("load_mask: nonzero padding bits in " + path.string());
    }
    return mask;
}

}  // namespace rgo
